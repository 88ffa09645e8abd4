"""Generalized Reed-Solomon codes and the star-product algebra behind the retrieval scheme.

An [n, k] GRS code with locators L and column multipliers v is the row space of the k x n
matrix with entries v_j * L_j^i. Its dual is again GRS on the same locators with multipliers
u_j = 1 / (v_j * L'_j), where L'_j = prod_{i != j} (L_j - L_i), and the star product of two
GRS codes on the same locators is GRS with the multipliers multiplied.

Weak self-duality reduces to a squareness condition: the code contains its dual exactly when
v_j^2 = 1 / (L'_j * h(L_j)) for a polynomial h of degree <= 2k - n that does not vanish on
the locators. In characteristic 2 every element is a square, so h = 1 always works.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import galois
import numpy as np

from qpir_lab.config.scheme_config import SearchConfig
from qpir_lab.errors import (
    ConstraintViolatedError,
    DimensionOverflowError,
    DimensionTooSmallError,
    InvalidCodeError,
    LocatorMismatchError,
    NotFoundError,
    NotWeaklySelfDualError,
    OddCharacteristicError,
    OddLengthError,
)
from qpir_lab.fields import FieldSpec, primitive_element, sqrt_char2
from qpir_lab.linalg import (
    MatrixGF,
    block_diag,
    kernel,
    rank,
    row_space_contains,
    vstack,
)


def evaluation_matrix(
    locators: galois.FieldArray, multipliers: galois.FieldArray, k: int
) -> MatrixGF:
    """k x n matrix with entry (i, j) = multipliers[j] * locators[j]^i. No validation."""
    GF = type(locators)
    rows = [GF.Ones(locators.shape[0])]
    for _ in range(1, k):
        rows.append(rows[-1] * locators)
    return vstack(*[row.reshape(1, -1) for row in rows[:k]]) * multipliers


def locator_derivatives(locators: galois.FieldArray) -> galois.FieldArray:
    """L'_j = prod_{i != j} (L_j - L_i)."""
    GF = type(locators)
    diffs = locators[:, np.newaxis] - locators[np.newaxis, :]
    diffs[np.diag_indices(locators.shape[0])] = GF(1)
    return np.multiply.reduce(diffs, axis=1)


@dataclass(frozen=True, eq=False)
class GrsCode:
    """[n, k] generalized Reed-Solomon code."""

    field: FieldSpec
    locators: galois.FieldArray
    """n pairwise distinct evaluation points."""
    multipliers: galois.FieldArray
    """n nonzero column multipliers."""
    dim: int

    def __post_init__(self):
        n = self.locators.shape[0]
        if self.locators.shape != (n,) or self.multipliers.shape != (n,):
            raise InvalidCodeError(
                f"Locators {self.locators.shape} and multipliers {self.multipliers.shape} must be equal-length vectors"
            )
        if type(self.locators) is not self.field.GF or type(self.multipliers) is not self.field.GF:
            raise InvalidCodeError(f"Locators and multipliers must live in {self.field}")
        if len(set(self.locators.view(np.ndarray).tolist())) != n:
            raise InvalidCodeError(f"Locators must be pairwise distinct: {self.locators}")
        if np.any(self.multipliers == 0):
            raise InvalidCodeError(f"Multipliers must be nonzero: {self.multipliers}")
        if not 1 <= self.dim <= n <= self.field.q:
            raise InvalidCodeError(
                f"Need 1 <= k <= n <= q, got k={self.dim}, n={n}, q={self.field.q}"
            )

    @property
    def length(self) -> int:
        return self.locators.shape[0]

    n = length

    @functools.cached_property
    def generator(self) -> MatrixGF:
        return grs_generator(self)

    def with_multipliers(self, multipliers: galois.FieldArray, dim: Optional[int] = None) -> GrsCode:
        return GrsCode(
            field=self.field,
            locators=self.locators,
            multipliers=multipliers,
            dim=self.dim if dim is None else dim,
        )

    def puncture(self, length: int) -> GrsCode:
        """Keep the first ``length`` coordinates."""
        return GrsCode(
            field=self.field,
            locators=self.locators[:length],
            multipliers=self.multipliers[:length],
            dim=self.dim,
        )

    def encode(self, messages: MatrixGF) -> MatrixGF:
        return messages @ self.generator

    def same_locators(self, other: GrsCode) -> bool:
        return self.field == other.field and np.array_equal(self.locators, other.locators)

    def as_dict(self) -> dict:
        return {
            "field": self.field.as_dict(),
            "locators": self.locators.view(np.ndarray).tolist(),
            "multipliers": self.multipliers.view(np.ndarray).tolist(),
            "dim": self.dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> GrsCode:
        spec = FieldSpec.from_dict(d["field"])
        return cls(
            field=spec,
            locators=spec(d["locators"]),
            multipliers=spec(d["multipliers"]),
            dim=d["dim"],
        )

    @classmethod
    def from_locators(cls, field: FieldSpec, locators: Sequence[int], dim: int) -> GrsCode:
        """Code with unit multipliers."""
        locators = field(list(locators))
        return cls(field=field, locators=locators, multipliers=field.ones(locators.shape[0]), dim=dim)

    def __repr__(self) -> str:
        return (
            f"GrsCode([{self.length},{self.dim}] over {self.field}, "
            f"L={self.locators.view(np.ndarray).tolist()}, v={self.multipliers.view(np.ndarray).tolist()})"
        )


@dataclass(frozen=True, eq=False)
class CartesianPairCode:
    """C' x C' with block-diagonal generator diag(G, G)."""

    base: GrsCode

    @functools.cached_property
    def generator(self) -> MatrixGF:
        return block_diag(self.base.generator, self.base.generator)

    @property
    def length(self) -> int:
        return 2 * self.base.length

    @property
    def dim(self) -> int:
        return 2 * self.base.dim


@dataclass(frozen=True, eq=False)
class StarGeneratorBundle:
    H: MatrixGF
    """Parity-check of S', (n - k - t + 1) x n."""
    F: MatrixGF
    """Rows completing H to a basis of S', (2(k + t - 1) - n) x n."""
    G_S: MatrixGF
    """[diag(H, H); diag(F, F)], 2(k + t - 1) x 2n."""

    @property
    def H_S(self) -> MatrixGF:
        """First 2(n - k - t + 1) rows of G_S; their span is the stabilizer space V."""
        return self.G_S[: 2 * self.H.shape[0]]


def grs_generator(code: GrsCode) -> MatrixGF:
    return evaluation_matrix(code.locators, code.multipliers, code.dim)


def grs_dual(code: GrsCode) -> GrsCode:
    if code.dim >= code.length:
        raise DimensionOverflowError(f"The [{code.length},{code.dim}] code has a zero dual")
    u = (code.multipliers * locator_derivatives(code.locators)) ** -1
    return code.with_multipliers(u, dim=code.length - code.dim)


def star_grs(c_code: GrsCode, d_code: GrsCode) -> GrsCode:
    if not c_code.same_locators(d_code):
        raise LocatorMismatchError("Star product needs codes on the same locators")
    dim = c_code.dim + d_code.dim - 1
    if dim > c_code.length:
        raise DimensionOverflowError(
            f"k + t - 1 = {dim} exceeds the length {c_code.length}"
        )
    return c_code.with_multipliers(c_code.multipliers * d_code.multipliers, dim=dim)


def self_dual_multipliers_char2(field: FieldSpec, locators: galois.FieldArray) -> GrsCode:
    """Self-dual [2k, k] GRS code in characteristic 2."""
    if not field.is_char2:
        raise OddCharacteristicError(f"Constructive self-dual codes need characteristic 2, got {field}")
    n = locators.shape[0]
    if n % 2 != 0:
        raise OddLengthError(f"Self-dual codes have even length, got {n}")
    v = sqrt_char2(locator_derivatives(locators) ** -1)
    return GrsCode(field=field, locators=locators, multipliers=v, dim=n // 2)


def weakly_self_dual_grs(field: FieldSpec, locators: galois.FieldArray, k: int) -> GrsCode:
    """[n, k] GRS code containing its dual, characteristic 2, k >= n/2.

    With v_j^2 = 1/L'_j the dual multipliers equal v, so the [n, n-k] dual is a subcode.
    """
    if not field.is_char2:
        raise OddCharacteristicError(f"Constructive weakly self-dual codes need characteristic 2, got {field}")
    n = locators.shape[0]
    if 2 * k < n:
        raise DimensionTooSmallError(f"k={k} < n/2 for n={n}")
    v = sqrt_char2(locator_derivatives(locators) ** -1)
    return GrsCode(field=field, locators=locators, multipliers=v, dim=k)


_SEARCH_CHUNK = 8192


def _base_digits(indices: np.ndarray, base: int, width: int) -> np.ndarray:
    """Little-endian base-``base`` digits of ``indices``, one row per index."""
    return (indices[:, np.newaxis] // base ** np.arange(width)) % base


@functools.lru_cache(maxsize=None)
def _wsd_multipliers(
    field: FieldSpec, locators: Tuple[int, ...], k: int, search: SearchConfig
) -> Tuple[Optional[Tuple[int, ...]], bool]:
    """Multipliers of a weakly self-dual [n, k] GRS code (or None), and whether every h was tried."""
    GF = field.GF
    L = GF(list(locators))
    n = len(locators)
    free = min(2 * k - n, n - 1)
    num_fixed = free + 1
    derivatives = locator_derivatives(L)
    inv_derivatives = derivatives**-1

    # h(L_j) * L'_j must be a nonzero square. h is determined by its values on the first
    # free + 1 locators, and scaling by a square keeps every class, so h(L_1) = 1 / L'_1.
    transfer = None
    if num_fixed < n:
        E = evaluation_matrix(L, field.ones(n), num_fixed)
        transfer = np.linalg.inv(E[:, :num_fixed]) @ E[:, num_fixed:]
    nonzero = field.elements()[1:]
    squares = nonzero[nonzero.is_square()].view(np.ndarray).astype(np.int64)

    def first_valid(digits: np.ndarray) -> Optional[galois.FieldArray]:
        scalars = np.concatenate([np.ones((digits.shape[0], 1), dtype=np.int64), squares[digits]], axis=1)
        H_fixed = GF(scalars) * inv_derivatives[:num_fixed]
        if transfer is None:
            return H_fixed[0]
        H_rest = H_fixed @ transfer
        classes = H_rest * derivatives[num_fixed:]
        valid = np.all((classes != 0) & classes.is_square(), axis=1)
        if not np.any(valid):
            return None
        row = int(np.argmax(valid))
        return GF(np.concatenate([H_fixed[row].view(np.ndarray), H_rest[row].view(np.ndarray)]))

    base = squares.shape[0]
    size = base**free
    exhaustive = size <= search.max_exhaustive
    h = None
    if exhaustive:
        for start in range(0, size, _SEARCH_CHUNK):
            h = first_valid(_base_digits(np.arange(start, min(start + _SEARCH_CHUNK, size)), base, free))
            if h is not None:
                break
    else:
        rng = np.random.default_rng(search.seed)
        digits = rng.integers(0, base, size=(search.num_random_trials, free))
        h = first_valid(np.concatenate([np.zeros((1, free), dtype=np.int64), digits]))
    if h is None:
        return None, exhaustive

    v = np.sqrt((derivatives * h) ** -1)
    v = v / v[0]
    return tuple(int(x) for x in v.view(np.ndarray)), exhaustive


def find_wsd_multipliers_search(
    field: FieldSpec,
    locators: galois.FieldArray,
    k: int,
    search: Optional[SearchConfig] = None,
) -> GrsCode:
    """Searches multipliers making the [n, k] GRS code on ``locators`` weakly self-dual.

    Walks the polynomials h of degree <= 2k-n through their values on the first locators,
    tried in the square class of 1 / L'_j, and takes v_j = sqrt(1 / (L'_j * h(L_j))). The
    walk is exhaustive up to ``search.max_exhaustive`` candidates, so a NotFoundError from an
    exhaustive walk means no such code exists on these locators. Larger spaces are sampled.
    Multipliers are scaled so the first one is 1; unit multipliers are tried first.
    """
    search = SearchConfig() if search is None else search
    n = locators.shape[0]
    if 2 * k < n:
        raise DimensionTooSmallError(f"k={k} < n/2 for n={n}")

    key = tuple(int(x) for x in locators.view(np.ndarray))
    multipliers, exhaustive = _wsd_multipliers(field, key, k, search)
    if multipliers is None:
        tried = "every candidate" if exhaustive else f"{search.num_random_trials} random candidates"
        raise NotFoundError(
            f"No weakly self-dual [{n},{k}] GRS code over {field} on locators {list(key)} ({tried})"
        )
    code = GrsCode(field=field, locators=locators, multipliers=field(list(multipliers)), dim=k)
    assert is_weakly_self_dual(code), f"{code} does not contain its dual"
    return code


def weakly_self_dual_on(
    field: FieldSpec,
    locators: galois.FieldArray,
    k: int,
    search: Optional[SearchConfig] = None,
) -> GrsCode:
    """Constructive path in characteristic 2, search otherwise."""
    if field.is_char2:
        return weakly_self_dual_grs(field, locators, k)
    return find_wsd_multipliers_search(field, locators, k, search)


def retrieval_code(
    c_code: GrsCode, t: int, search: Optional[SearchConfig] = None
) -> GrsCode:
    """[n, t] GRS code D' with C' * D' weakly self-dual."""
    n = c_code.length
    s_dim = c_code.dim + t - 1
    if t < 1 or not (n <= 2 * s_dim and s_dim < n):
        raise ConstraintViolatedError(
            f"Need n/2 <= k + t - 1 < n, got n={n}, k={c_code.dim}, t={t}"
        )
    s_code = weakly_self_dual_on(c_code.field, c_code.locators, s_dim, search)
    return c_code.with_multipliers(s_code.multipliers / c_code.multipliers, dim=t)


def is_weakly_self_dual(code: GrsCode) -> bool:
    G = code.generator
    return row_space_contains(G, kernel(G))


def is_self_dual(code: GrsCode) -> bool:
    return 2 * code.dim == code.length and is_weakly_self_dual(code)


def split_wsd_generator(s_code: GrsCode) -> StarGeneratorBundle:
    """G_S = [diag(H, H); diag(F, F)] with H a parity-check of S' and F completing it."""
    if not is_weakly_self_dual(s_code):
        raise NotWeaklySelfDualError(f"{s_code} does not contain its dual")
    GF = s_code.field.GF
    n = s_code.length
    if s_code.dim == n:
        H = GF.Zeros((0, n))
    else:
        H = grs_generator(grs_dual(s_code))

    G = s_code.generator
    F_rows = []
    current = H
    for row in G:
        candidate = vstack(current, row.reshape(1, -1))
        if rank(candidate) > rank(current):
            F_rows.append(row)
            current = candidate
        if current.shape[0] == s_code.dim:
            break
    F = vstack(*[r.reshape(1, -1) for r in F_rows]) if F_rows else GF.Zeros((0, n))
    assert H.shape[0] + F.shape[0] == s_code.dim, f"{H.shape} + {F.shape} != dim {s_code.dim}"

    G_S = vstack(block_diag(H, H), block_diag(F, F))
    return StarGeneratorBundle(H=H, F=F, G_S=G_S)


def default_locators(field: FieldSpec, n: int) -> galois.FieldArray:
    """alpha^0, ..., alpha^(n-1) for the smallest primitive alpha; 0 is appended when n = q."""
    if not 1 <= n <= field.q:
        raise InvalidCodeError(f"Need 1 <= n <= q={field.q}, got n={n}")
    alpha = primitive_element(field)
    powers = [field.GF(1)]
    for _ in range(1, min(n, field.q - 1)):
        powers.append(powers[-1] * alpha)
    if n == field.q:
        powers.append(field.GF(0))
    return field.GF(np.array([int(x) for x in powers]))
