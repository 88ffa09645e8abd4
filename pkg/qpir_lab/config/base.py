from datetime import datetime
from dataclasses import dataclass
from typing import Optional, Literal

# Timestamp for naming runs and default output files, shared across config modules.
CONFIG_DATETIME_STR = datetime.now().strftime("%Y-%m-%d_%H-%M-%S-%f")

DEFAULT_WANDB_PROJECT = "qpir_lab"


@dataclass(frozen=True)
class WandbConfig:
    """Parameters for logging runs and verification suites to wandb."""

    project: str = DEFAULT_WANDB_PROJECT
    """Name of the wandb project."""

    entity: Optional[str] = None
    """Account associated with the wandb project."""

    name: str = CONFIG_DATETIME_STR
    """Name of the run."""

    group: Optional[str] = None
    """Name of the run group, e.g. one per parameter sweep."""

    job_type: Optional[str] = None
    """Name of the job type (demo, run, verify, rate)."""

    mode: Literal["online", "offline", "disabled"] = "offline"
    """wandb mode; offline runs can be synced later with `wandb sync`."""
