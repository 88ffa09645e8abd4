import pathlib
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import tyro
from typing_extensions import Annotated

from qpir_lab.config.base import WandbConfig
from qpir_lab.config.scheme_config import SchemeConfig, SearchConfig


@dataclass(frozen=True)
class BaseCommandConfig:
    seed: int = 0
    """Seed for files, query randomness and sampling."""

    out: Optional[pathlib.Path] = None
    """Output path; defaults to a timestamped file under outputs/."""

    verbose: bool = False
    """Print the config and per-section timings."""

    wandb: Optional[WandbConfig] = None
    """Log the run to wandb when set."""


@dataclass(frozen=True)
class DemoConfig(BaseCommandConfig):
    """The [6, 3] GF(7) instance with t = 2 and two random files."""

    K: int = 1
    """Index of the wanted file."""

    verify: bool = False
    """Also run the measurement-matrix and privacy checks on the instance."""


@dataclass(frozen=True)
class RunConfig(BaseCommandConfig):
    q: int = 8
    n: int = 6
    k: int = 2
    t: int = 2
    m: int = 3
    K: int = 2
    """Index of the wanted file."""

    in_path: Annotated[Optional[pathlib.Path], tyro.conf.arg(name="in")] = None
    """JSON document with field "files": m arrays of L * 2 beta k integers below q. Random files when omitted."""

    locators: Optional[Tuple[int, ...]] = None
    """Integer-encoded evaluation points of the storage code."""

    include_queries: bool = False
    """Write the query matrices into the transcript."""

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(
            q=self.q,
            n=self.n,
            k=self.k,
            t=self.t,
            m=self.m,
            locators=self.locators,
            search=SearchConfig(),
        )


@dataclass(frozen=True)
class VerifyConfig(BaseCommandConfig):
    suite: Literal["codes", "symplectic", "protocol", "privacy", "oracle", "all"] = "all"
    """Which verification suite to run."""


@dataclass(frozen=True)
class RateConfig(BaseCommandConfig):
    grid: Optional[Tuple[Tuple[int, int, int], ...]] = None
    """(n, k, t) triples; every valid triple with n <= max_n when omitted."""

    max_n: int = 8
    """Largest n of the default grid."""


@dataclass(frozen=True)
class SweepConfig(BaseCommandConfig):
    qs: Tuple[int, ...] = (7, 8, 11, 13, 16)
    """Field orders to sweep."""

    seeds: int = 100
    """Seeded runs per (q, n, k, t, m)."""

    m_values: Tuple[int, ...] = (1, 2, 3, 4)
    """Numbers of files."""

    max_n: Optional[int] = None
    """Cap on the number of servers (default: q)."""

    min_supported_share: float = 0.5
    """Warn for field orders where fewer tuples than this share have a weakly self-dual code."""


CliCommand = tyro.extras.subcommand_type_from_defaults(
    {
        "demo": DemoConfig(),
        "run": RunConfig(),
        "verify": VerifyConfig(),
        "rate": RateConfig(),
        "sweep": SweepConfig(),
    }
)

if __name__ == "__main__":
    cfg = tyro.cli(CliCommand)
    print(cfg)
