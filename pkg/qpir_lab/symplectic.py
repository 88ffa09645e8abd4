"""Symplectic geometry of F_q^{2n}.

Vectors are (a | b) with a, b in F_q^n. The form is x J y^T with J = [[0, -I], [I, 0]], so
(a, b) J (c, d)^T = b.c - a.d; ``symp_form`` returns its trace in GF(p). Duals and
self-orthogonality are computed with the F_q-bilinear form, which on F_q-linear subspaces
agrees with the trace form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Type

import galois
import numpy as np

from qpir_lab.errors import (
    LengthMismatchError,
    NotSelfOrthogonalError,
    SingularBasisError,
)
from qpir_lab.fields import trace
from qpir_lab.linalg import MatrixGF, kernel, rank, vstack


def symplectic_matrix(GF: Type[galois.FieldArray], n: int) -> MatrixGF:
    """J = [[0, -I], [I, 0]] of size 2n; in characteristic 2, -I = I."""
    eye = GF.Identity(n)
    J = GF.Zeros((2 * n, 2 * n))
    J[:n, n:] = -eye
    J[n:, :n] = eye
    return J


def bilinear_form(x: MatrixGF, y: MatrixGF) -> galois.FieldArray:
    """x J y^T over F_q (rows of x against rows of y when given matrices)."""
    if x.shape[-1] != y.shape[-1] or x.shape[-1] % 2 != 0:
        raise LengthMismatchError(
            f"Symplectic vectors need equal even lengths, got {x.shape[-1]} and {y.shape[-1]}"
        )
    J = symplectic_matrix(type(x), x.shape[-1] // 2)
    return x @ J @ y.T


def symp_form(x: MatrixGF, y: MatrixGF) -> galois.FieldArray:
    """tr(x J y^T) in the prime subfield."""
    return trace(bilinear_form(x, y))


def symp_dual(V_basis: MatrixGF) -> MatrixGF:
    """Basis of {w : x J w^T = 0 for all rows x of V_basis}."""
    J = symplectic_matrix(type(V_basis), V_basis.shape[1] // 2)
    return kernel(V_basis @ J)


def is_self_orthogonal(V_basis: MatrixGF) -> bool:
    if V_basis.shape[0] == 0:
        return True
    return not np.any(bilinear_form(V_basis, V_basis))


@dataclass(frozen=True, eq=False)
class SymplecticSubspace:
    """A self-orthogonal V together with a basis of V^{perp_J}."""

    V_basis: MatrixGF
    Vperp_basis: MatrixGF

    @property
    def n(self) -> int:
        return self.V_basis.shape[1] // 2

    @classmethod
    def from_basis(cls, V_basis: MatrixGF) -> SymplecticSubspace:
        if not is_self_orthogonal(V_basis):
            raise NotSelfOrthogonalError("Basis rows have a nonzero symplectic pairing")
        return cls(V_basis=V_basis, Vperp_basis=symp_dual(V_basis))

    @property
    def dim(self) -> int:
        return rank(self.V_basis)


@dataclass(frozen=True, eq=False)
class CosetDecoder:
    """Reads the coset label x of A in span(G_S) + x M off the stacked basis (G_S; M)."""

    G_S: MatrixGF
    M: MatrixGF
    basis_inverse: MatrixGF

    @classmethod
    def from_matrices(cls, G_S: MatrixGF, M: MatrixGF) -> CosetDecoder:
        stacked = vstack(G_S, M)
        if stacked.shape[0] != stacked.shape[1] or rank(stacked) != stacked.shape[1]:
            raise SingularBasisError(
                f"(G_S; M) is {stacked.shape[0]}x{stacked.shape[1]} of rank {rank(stacked)}, not a basis"
            )
        return cls(G_S=G_S, M=M, basis_inverse=np.linalg.inv(stacked))

    @property
    def num_labels(self) -> int:
        return self.M.shape[0]

    def decode(self, A: MatrixGF) -> MatrixGF:
        coefficients = A @ self.basis_inverse
        return coefficients[..., self.G_S.shape[0] :]


def coset_decode(A: MatrixGF, decoder: CosetDecoder) -> MatrixGF:
    return decoder.decode(A)


