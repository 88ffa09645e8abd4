from dataclasses import dataclass, field
from typing import Optional, Tuple


@dataclass(frozen=True)
class SearchConfig:
    """Budget for the odd-characteristic weakly self-dual multiplier search."""

    max_exhaustive: int = 2_000_000
    """Walk every candidate polynomial when there are at most this many, otherwise sample."""

    num_random_trials: int = 10_000
    """Random candidates tried when the space is too large to walk."""

    seed: int = 0
    """Seed for the random trials."""


@dataclass(frozen=True)
class SchemeConfig:
    """Parameters of a coded QPIR instance."""

    q: int = 7
    """Field order (prime power)."""

    n: int = 6
    """Number of servers."""

    k: int = 3
    """Dimension of the storage code C'."""

    t: int = 2
    """Collusion parameter."""

    m: int = 2
    """Number of files."""

    locators: Optional[Tuple[int, ...]] = None
    """Integer-encoded evaluation points; defaults to powers of a primitive element."""

    search: SearchConfig = field(default_factory=SearchConfig)
    """Weakly self-dual search budget (odd characteristic only)."""
