"""Finite fields GF(p^m) on top of the ``galois`` package.

A ``FieldSpec`` pins down a field by its characteristic, degree and modulus so that two runs
with the same arguments build the same field. Elements are ``galois.FieldArray`` values;
their integer encoding is the little-endian base-p digit string of the polynomial-basis
coefficient vector, which is exactly galois' integer representation.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import List, Optional, Sequence, Tuple, Type, Union

import galois
import numpy as np

from qpir_lab.errors import (
    DivideByZeroError,
    ElementRangeError,
    FieldMismatchError,
    InvalidParamsError,
    NonPrimeError,
    OddCharacteristicError,
    ReducibleModulusError,
)

FieldElement = galois.FieldArray
"""A 0-d (or n-d, elementwise) ``galois.FieldArray``."""


@dataclass(frozen=True)
class FieldSpec:
    """Descriptor of GF(p^m)."""

    p: int
    """Characteristic."""

    m: int
    """Extension degree."""

    modulus: Tuple[int, ...]
    """Monic irreducible modulus over GF(p), coefficients in descending degree order."""

    GF: Type[galois.FieldArray] = field(compare=False, hash=False, repr=False)
    """The galois field class implementing the arithmetic."""

    @property
    def q(self) -> int:
        return self.p**self.m

    @property
    def prime_field(self) -> Type[galois.FieldArray]:
        return galois.GF(self.p)

    @property
    def is_char2(self) -> bool:
        return self.p == 2

    def __call__(self, values) -> galois.FieldArray:
        """Cast integers (or nested lists of integers) into the field."""
        try:
            return self.GF(values)
        except ValueError as e:
            raise ElementRangeError(f"Values out of range for GF({self.q}): {e}") from e

    def zeros(self, shape) -> galois.FieldArray:
        return self.GF.Zeros(shape)

    def ones(self, shape) -> galois.FieldArray:
        return self.GF.Ones(shape)

    def identity(self, size: int) -> galois.FieldArray:
        return self.GF.Identity(size)

    def random(self, shape, rng: np.random.Generator) -> galois.FieldArray:
        """Uniform field elements drawn from a seeded generator."""
        return self.GF.Random(shape, seed=rng)

    def elements(self) -> galois.FieldArray:
        return self.GF.elements

    def as_dict(self) -> dict:
        return {"p": self.p, "m": self.m, "modulus": list(self.modulus)}

    @classmethod
    def from_dict(cls, d: dict) -> FieldSpec:
        return field_make(d["p"], d["m"], tuple(d["modulus"]))

    def __str__(self) -> str:
        return f"GF({self.p}^{self.m})" if self.m > 1 else f"GF({self.p})"


@functools.lru_cache(maxsize=None)
def _field_make_cached(p: int, m: int, modulus: Optional[Tuple[int, ...]]) -> FieldSpec:
    prime_field = galois.GF(p)
    if modulus is None:
        if m == 1:
            poly = galois.Poly([1, 0], field=prime_field)
        else:
            poly = galois.irreducible_poly(p, m, method="min")
    else:
        if any(not 0 <= c < p for c in modulus):
            raise ReducibleModulusError(f"Modulus coefficients must lie in [0, {p}): {modulus}")
        poly = galois.Poly(list(modulus), field=prime_field)
        if poly.degree != m or int(poly.coeffs[0]) != 1:
            raise ReducibleModulusError(
                f"Modulus must be monic of degree {m}, got {poly} (degree {poly.degree})"
            )
        if not poly.is_irreducible():
            raise ReducibleModulusError(f"Modulus {poly} is reducible over GF({p})")

    if m == 1:
        GF = prime_field
    else:
        GF = galois.GF(p**m, irreducible_poly=poly)
    modulus_tuple = tuple(int(c) for c in poly.coeffs)
    return FieldSpec(p=p, m=m, modulus=modulus_tuple, GF=GF)


def field_make(p: int, m: int = 1, modulus: Optional[Sequence[int]] = None) -> FieldSpec:
    """Builds GF(p^m).

    Without a modulus the lexicographically lowest monic irreducible of degree m is used
    (x for m = 1), so fixtures are reproducible.
    """
    if not isinstance(p, (int, np.integer)) or not galois.is_prime(int(p)):
        raise NonPrimeError(f"Characteristic must be prime, got {p}")
    if m < 1:
        raise InvalidParamsError(f"Extension degree must be >= 1, got {m}")
    return _field_make_cached(
        int(p), int(m), None if modulus is None else tuple(int(c) for c in modulus)
    )


def field_for_order(q: int) -> FieldSpec:
    """The canonical field of order q (q must be a prime power)."""
    if q < 2 or not galois.is_prime_power(q):
        raise NonPrimeError(f"Field order must be a prime power, got {q}")
    primes, exponents = galois.factors(q)
    return field_make(int(primes[0]), int(exponents[0]))


class ArithOp(Enum):
    ADD = auto()
    SUB = auto()
    MUL = auto()
    DIV = auto()
    NEG = auto()
    INV = auto()
    POW = auto()


def arith(
    a: FieldElement,
    b: Optional[Union[FieldElement, int]],
    op: ArithOp,
) -> FieldElement:
    """Exact field arithmetic with explicit error types.

    ``b`` is ignored for NEG and INV and is an integer exponent for POW.
    """
    if op in (ArithOp.NEG, ArithOp.INV):
        if op == ArithOp.NEG:
            return -a
        if np.any(a == 0):
            raise DivideByZeroError("Inverse of zero")
        return a**-1

    if op == ArithOp.POW:
        exponent = int(b)
        if exponent < 0 and np.any(a == 0):
            raise DivideByZeroError("Negative power of zero")
        return a**exponent

    if not isinstance(b, galois.FieldArray) or type(a) is not type(b):
        raise FieldMismatchError(
            f"Operands live in different fields: {type(a).__name__} vs {type(b).__name__}"
        )
    if op == ArithOp.ADD:
        return a + b
    if op == ArithOp.SUB:
        return a - b
    if op == ArithOp.MUL:
        return a * b
    if op == ArithOp.DIV:
        if np.any(b == 0):
            raise DivideByZeroError("Division by zero")
        return a / b
    raise ValueError(f"Unknown op: {op}")


def trace(x: FieldElement) -> galois.FieldArray:
    """Absolute trace GF(p^m) -> GF(p): sum of x^(p^i), i < m. Works elementwise."""
    GF = type(x)
    if GF.degree == 1:
        return x.copy()
    return x.field_trace()


def sqrt_char2(x: FieldElement) -> FieldElement:
    """The unique square root in characteristic 2, x^(2^(m-1))."""
    GF = type(x)
    if GF.characteristic != 2:
        raise OddCharacteristicError(
            f"sqrt_char2 needs characteristic 2, got {GF.characteristic}"
        )
    return x ** (2 ** (GF.degree - 1))


def primitive_element(spec: FieldSpec) -> FieldElement:
    """Smallest-index generator of the multiplicative group."""
    for i in range(1, spec.q):
        candidate = spec.GF(i)
        if candidate.multiplicative_order() == spec.q - 1:
            return candidate
    raise AssertionError(f"No primitive element found in {spec}")


def encode(x: FieldElement) -> Union[int, List]:
    """Integer encoding (nested lists for arrays)."""
    return x.view(np.ndarray).tolist()


def decode(spec: FieldSpec, values) -> FieldElement:
    return spec(values)


def coefficients(x: FieldElement) -> List[int]:
    """Polynomial-basis coefficient vector of a scalar element, lowest degree first."""
    return [int(c) for c in x.vector()[::-1]]
