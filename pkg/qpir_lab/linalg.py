"""Dense linear algebra over GF(q).

Thin wrappers around galois' elimination routines that fix the conventions the rest of the
package relies on: bases are stored as matrix rows, zero-row matrices are legal everywhere,
and the paired-index notation (i, b) / (p, s) maps to array offsets in one place.
"""

from __future__ import annotations

from typing import List, NamedTuple, Type

import galois
import numpy as np
import scipy.linalg

from qpir_lab.errors import DimensionMismatchError, InconsistentError

MatrixGF = galois.FieldArray
"""A 2-d ``galois.FieldArray``; rows are vectors."""


class RrefResult(NamedTuple):
    R: MatrixGF
    rank: int
    pivots: List[int]
    """0-based pivot columns, ascending."""


def _pivot_columns(R: MatrixGF) -> List[int]:
    pivots = []
    for row in R.view(np.ndarray):
        nonzero = np.flatnonzero(row)
        if nonzero.size == 0:
            break
        pivots.append(int(nonzero[0]))
    return pivots


def rref(M: MatrixGF) -> RrefResult:
    """Reduced row echelon form, first-nonzero pivoting, columns left to right."""
    assert M.ndim == 2, f"Expected a matrix, got shape {M.shape}"
    if M.shape[0] == 0 or M.shape[1] == 0 or not np.any(M):
        return RrefResult(R=type(M).Zeros(M.shape), rank=0, pivots=[])
    R = M.row_reduce()
    pivots = _pivot_columns(R)
    return RrefResult(R=R, rank=len(pivots), pivots=pivots)


def rank(M: MatrixGF) -> int:
    if M.shape[0] == 0 or M.shape[1] == 0:
        return 0
    return int(np.linalg.matrix_rank(M))


def kernel(M: MatrixGF) -> MatrixGF:
    """Basis (as rows) of the right null space {v : M v^T = 0}."""
    GF = type(M)
    cols = M.shape[1]
    if M.shape[0] == 0 or not np.any(M):
        return GF.Identity(cols)
    if rank(M) == cols:
        return GF.Zeros((0, cols))
    return M.null_space()


def vstack(*matrices: MatrixGF) -> MatrixGF:
    GF = type(matrices[0])
    return GF(np.concatenate([m.view(np.ndarray) for m in matrices], axis=0))


def block_diag(*matrices: MatrixGF) -> MatrixGF:
    """diag(M_1, ..., M_r) over the matrices' field."""
    GF = type(matrices[0])
    return scipy.linalg.block_diag(*[m.view(np.ndarray) for m in matrices]).view(GF)


def solve_left(A: MatrixGF, b: MatrixGF) -> MatrixGF:
    """A row vector x with x A = b; free coordinates are set to zero."""
    GF = type(A)
    if b.shape != (A.shape[1],):
        raise DimensionMismatchError(
            f"Right-hand side has shape {b.shape}, expected ({A.shape[1]},)"
        )
    if A.shape[0] == 0:
        if np.any(b):
            raise InconsistentError("Nonzero vector is not in the span of an empty basis")
        return GF.Zeros(0)

    augmented = GF(
        np.concatenate(
            [A.T.view(np.ndarray), b.view(np.ndarray).reshape(-1, 1)], axis=1
        )
    )
    R, _, pivots = rref(augmented)
    if A.shape[0] in pivots:
        raise InconsistentError("Vector is not in the row space")

    x = GF.Zeros(A.shape[0])
    for row, col in enumerate(pivots):
        x[col] = R[row, -1]
    return x


def in_row_space(v: MatrixGF, M: MatrixGF) -> bool:
    if v.shape[-1] != M.shape[1]:
        raise DimensionMismatchError(f"Widths differ: {v.shape[-1]} vs {M.shape[1]}")
    if not np.any(v):
        return True
    return rank(vstack(M, v.reshape(1, -1))) == rank(M)


def row_space_contains(M: MatrixGF, rows: MatrixGF) -> bool:
    """Every row of ``rows`` lies in the row space of M."""
    if rows.shape[0] == 0 or not np.any(rows):
        return True
    return rank(vstack(M, rows)) == rank(M)


def row_space_equal(A: MatrixGF, B: MatrixGF) -> bool:
    if A.shape[1] != B.shape[1]:
        return False
    return row_space_contains(A, B) and row_space_contains(B, A)


def basis_vector(GF: Type[galois.FieldArray], length: int, index: int) -> MatrixGF:
    """e^length_index with a 1-based index."""
    if not 1 <= index <= length:
        raise IndexError(f"Index {index} out of range [1, {length}]")
    e = GF.Zeros(length)
    e[index - 1] = 1
    return e


def pair_index(i: int, b: int, beta: int) -> int:
    """Row offset of the 1-based pair (i, b), i.e. (i-1)*beta + b - 1."""
    if not 1 <= b <= beta or i < 1:
        raise IndexError(f"Pair ({i}, {b}) out of range for beta={beta}")
    return (i - 1) * beta + b - 1


def half_index(p: int, s: int, n: int) -> int:
    """Column offset of the 1-based pair (p, s) of a 2n-vector, i.e. (p-1)*n + s - 1."""
    if p not in (1, 2) or not 1 <= s <= n:
        raise IndexError(f"Pair ({p}, {s}) out of range for n={n}")
    return (p - 1) * n + s - 1


def matrix_to_dict(M: MatrixGF) -> dict:
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "entries": M.view(np.ndarray).reshape(-1).tolist(),
    }


def matrix_from_dict(GF: Type[galois.FieldArray], d: dict) -> MatrixGF:
    entries = np.asarray(d["entries"], dtype=np.int64)
    if entries.size != d["rows"] * d["cols"]:
        raise DimensionMismatchError(
            f"{entries.size} entries for a {d['rows']}x{d['cols']} matrix"
        )
    return GF(entries.reshape(d["rows"], d["cols"]))


def enumerate_vectors(GF: Type[galois.FieldArray], length: int) -> MatrixGF:
    """All q^length vectors as rows; row x has entries the base-q digits of x, least significant first."""
    q = GF.order
    indices = np.arange(q**length, dtype=np.int64)
    digits = (indices[:, np.newaxis] // q ** np.arange(length, dtype=np.int64)) % q
    return GF(digits.reshape(q**length, length))


def span_elements(basis: MatrixGF) -> MatrixGF:
    """Every element of the row space of an independent basis, q^rows of them."""
    GF = type(basis)
    if basis.shape[0] == 0:
        return GF.Zeros((1, basis.shape[1]))
    return enumerate_vectors(GF, basis.shape[0]) @ basis
