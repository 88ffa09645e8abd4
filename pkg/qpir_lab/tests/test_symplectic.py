import numpy as np
import pytest

from qpir_lab.errors import LengthMismatchError, NotSelfOrthogonalError, SingularBasisError
from qpir_lab.fields import field_for_order
from qpir_lab.linalg import rank, row_space_equal
from qpir_lab.symplectic import (
    CosetDecoder,
    SymplecticSubspace,
    bilinear_form,
    coset_decode,
    is_self_orthogonal,
    symp_dual,
    symp_form,
    symplectic_matrix,
)


def test_symplectic_matrix(gf7):
    J = symplectic_matrix(gf7.GF, 2)
    assert J.tolist() == [
        [0, 0, 6, 0],
        [0, 0, 0, 6],
        [1, 0, 0, 0],
        [0, 1, 0, 0],
    ]
    gf8 = field_for_order(8)
    J8 = symplectic_matrix(gf8.GF, 3)
    assert np.array_equal(J8, J8.T)


def test_bilinear_form_formula(gf7):
    x = gf7([1, 2, 3, 4])
    y = gf7([5, 6, 0, 1])
    # (a, b) J (c, d)^T = b.c - a.d
    expected = gf7([3, 4]) @ gf7([5, 6]) - gf7([1, 2]) @ gf7([0, 1])
    assert bilinear_form(x, y) == expected
    assert bilinear_form(x, x) == 0


@pytest.mark.parametrize("q", [5, 8, 9])
def test_form_alternating_and_antisymmetric(q):
    spec = field_for_order(q)
    rng = np.random.default_rng(q)
    X = spec.random((16, 6), rng)
    Y = spec.random((16, 6), rng)
    assert not np.any(np.diag(bilinear_form(X, X)))
    assert np.array_equal(bilinear_form(X, Y), -bilinear_form(Y, X).T)
    values = symp_form(X, Y)
    assert np.all(values.view(np.ndarray) < spec.p)
    assert np.array_equal(values, -symp_form(Y, X).T)


def test_length_mismatch(gf7):
    with pytest.raises(LengthMismatchError):
        bilinear_form(gf7.zeros(4), gf7.zeros(6))
    with pytest.raises(LengthMismatchError):
        symp_form(gf7.zeros(3), gf7.zeros(3))


def test_stabilizer_space_of_worked_scheme(worked_scheme):
    G_S = worked_scheme.G_S
    H_S = worked_scheme.bundle.H_S
    assert is_self_orthogonal(H_S)
    assert not is_self_orthogonal(G_S)
    assert row_space_equal(symp_dual(H_S), G_S)
    assert rank(symp_dual(G_S)) == 12 - rank(G_S)


def test_symplectic_subspace(worked_scheme):
    space = SymplecticSubspace.from_basis(worked_scheme.bundle.H_S)
    assert space.n == 6
    assert space.dim == 4
    assert space.Vperp_basis.shape == (8, 12)
    with pytest.raises(NotSelfOrthogonalError):
        SymplecticSubspace.from_basis(worked_scheme.G_S)


def test_coset_decoder_recovers_labels(gf7, worked_scheme):
    G_S = worked_scheme.G_S
    M = worked_scheme.schedules[0].M
    decoder = CosetDecoder.from_matrices(G_S, M)
    assert decoder.num_labels == 4

    rng = np.random.default_rng(0)
    labels = gf7.random((5, 4), rng)
    A = gf7.random((5, 8), rng) @ G_S + labels @ M
    assert np.array_equal(coset_decode(A, decoder), labels)


def test_coset_decoder_rejects_non_basis(worked_scheme):
    G_S = worked_scheme.G_S
    with pytest.raises(SingularBasisError):
        CosetDecoder.from_matrices(G_S, G_S[:4])
    with pytest.raises(SingularBasisError):
        CosetDecoder.from_matrices(G_S, worked_scheme.schedules[0].M[:3])
