import itertools

import numpy as np
import pytest

from qpir_lab.codes import (
    CartesianPairCode,
    GrsCode,
    default_locators,
    evaluation_matrix,
    find_wsd_multipliers_search,
    grs_dual,
    is_self_dual,
    is_weakly_self_dual,
    retrieval_code,
    self_dual_multipliers_char2,
    split_wsd_generator,
    star_grs,
    weakly_self_dual_grs,
    weakly_self_dual_on,
)
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
from qpir_lab.fields import field_for_order
from qpir_lab.linalg import block_diag, kernel, rank, row_space_equal
from qpir_lab.tests.conftest import F_ROWS, G_C_ROWS, H_ROWS, LOCATORS


@pytest.fixture(scope="module")
def c_code(gf7) -> GrsCode:
    return GrsCode.from_locators(gf7, LOCATORS, 3)


def test_worked_generator(gf7, c_code):
    assert np.array_equal(c_code.generator, gf7(G_C_ROWS))


def test_generator_edge_dimensions(gf7):
    assert np.array_equal(GrsCode.from_locators(gf7, LOCATORS, 1).generator, gf7.ones((1, 6)))
    assert rank(GrsCode.from_locators(gf7, LOCATORS, 6).generator) == 6


def test_code_validation(gf7):
    with pytest.raises(InvalidCodeError):
        GrsCode.from_locators(gf7, (1, 1, 2, 3), 2)
    with pytest.raises(InvalidCodeError):
        GrsCode(field=gf7, locators=gf7([1, 2, 3]), multipliers=gf7([1, 0, 1]), dim=2)
    with pytest.raises(InvalidCodeError):
        GrsCode.from_locators(gf7, (1, 2, 3), 4)
    # The raw evaluation matrix accepts duplicates; it feeds the negative controls.
    assert evaluation_matrix(gf7([1, 1, 2]), gf7.ones(3), 2).shape == (2, 3)


def test_code_serialization(gf7, c_code):
    code = c_code.with_multipliers(gf7([1, 2, 3, 4, 5, 6]))
    restored = GrsCode.from_dict(code.as_dict())
    assert np.array_equal(restored.generator, code.generator)


def test_dual(gf7, c_code, worked_scheme):
    assert row_space_equal(grs_dual(grs_dual(c_code)).generator, c_code.generator)
    s_code = worked_scheme.s_code
    assert not np.any(grs_dual(s_code).generator @ s_code.generator.T)
    ones = GrsCode.from_locators(gf7, LOCATORS, 1)
    dual = grs_dual(ones)
    assert dual.dim == 5
    assert row_space_equal(dual.generator, kernel(ones.generator))
    with pytest.raises(DimensionOverflowError):
        grs_dual(GrsCode.from_locators(gf7, LOCATORS, 6))


def test_star(gf7, c_code):
    d_code = GrsCode.from_locators(gf7, LOCATORS, 2)
    s_code = star_grs(c_code, d_code)
    assert s_code.dim == 4
    ones = GrsCode.from_locators(gf7, LOCATORS, 1)
    assert row_space_equal(star_grs(c_code, ones).generator, c_code.generator)


def test_star_errors(gf7, c_code):
    with pytest.raises(LocatorMismatchError):
        star_grs(c_code, GrsCode.from_locators(gf7, (1, 2, 3, 4, 5, 6), 2))
    with pytest.raises(DimensionOverflowError):
        star_grs(GrsCode.from_locators(gf7, LOCATORS, 4), GrsCode.from_locators(gf7, LOCATORS, 4))


@pytest.mark.parametrize("q,n", [(8, 4), (8, 8), (16, 8), (16, 16)])
def test_self_dual_char2(q, n):
    spec = field_for_order(q)
    code = self_dual_multipliers_char2(spec, default_locators(spec, n))
    assert code.dim == n // 2
    assert is_self_dual(code)
    assert row_space_equal(grs_dual(code).generator, code.generator)


def test_self_dual_char2_errors(gf7):
    with pytest.raises(OddCharacteristicError):
        self_dual_multipliers_char2(gf7, gf7([1, 2, 3, 4]))
    gf8 = field_for_order(8)
    with pytest.raises(OddLengthError):
        self_dual_multipliers_char2(gf8, default_locators(gf8, 5))


def test_weakly_self_dual_char2():
    gf8 = field_for_order(8)
    locators = default_locators(gf8, 6)
    assert is_weakly_self_dual(weakly_self_dual_grs(gf8, locators, 4))
    assert is_weakly_self_dual(weakly_self_dual_grs(gf8, locators, 6))
    assert is_self_dual(weakly_self_dual_grs(gf8, locators, 3))
    with pytest.raises(DimensionTooSmallError):
        weakly_self_dual_grs(gf8, locators, 2)
    with pytest.raises(OddCharacteristicError):
        weakly_self_dual_grs(field_for_order(7), field_for_order(7)([1, 2, 3]), 2)


def test_search_worked_example(gf7):
    code = find_wsd_multipliers_search(gf7, gf7(list(LOCATORS)), 4)
    assert is_weakly_self_dual(code)
    assert np.array_equal(code.multipliers, gf7.ones(6))
    with pytest.raises(DimensionTooSmallError):
        find_wsd_multipliers_search(gf7, gf7(list(LOCATORS)), 2)


def test_search_agrees_with_char2_construction():
    gf8 = field_for_order(8)
    locators = default_locators(gf8, 6)
    searched = find_wsd_multipliers_search(gf8, locators, 4)
    constructed = weakly_self_dual_on(gf8, locators, 4)
    assert is_weakly_self_dual(searched)
    assert is_weakly_self_dual(constructed)


def test_search_not_found_gf5_length4():
    # Over GF(5) the values L'_j on any four locators are two squares and two non-squares.
    gf5 = field_for_order(5)
    with pytest.raises(NotFoundError, match="every candidate"):
        find_wsd_multipliers_search(gf5, default_locators(gf5, 4), 2)


def test_search_not_found_gf13_length4():
    # L' on 1, 2, 4, 8 is 5, 12, 2, 12; 5 and 2 are non-squares mod 13.
    gf13 = field_for_order(13)
    with pytest.raises(NotFoundError):
        find_wsd_multipliers_search(gf13, default_locators(gf13, 4), 2)


def test_search_samples_large_spaces(gf7):
    sampled = SearchConfig(max_exhaustive=0, num_random_trials=50)
    code = find_wsd_multipliers_search(gf7, gf7(list(LOCATORS)), 4, sampled)
    assert np.array_equal(code.multipliers, gf7.ones(6))
    gf5 = field_for_order(5)
    with pytest.raises(NotFoundError, match="50 random candidates"):
        find_wsd_multipliers_search(gf5, default_locators(gf5, 4), 2, sampled)


@pytest.mark.parametrize("locators", [(1, 3, 2, 6), (1, 2, 3, 4), (0, 1, 5, 6)])
@pytest.mark.parametrize("k", [2, 3])
def test_search_agrees_with_brute_force(gf7, locators, k):
    L = gf7(list(locators))
    exists = any(
        is_weakly_self_dual(GrsCode(field=gf7, locators=L, multipliers=gf7([1, *rest]), dim=k))
        for rest in itertools.product(range(1, 7), repeat=3)
    )
    try:
        code = find_wsd_multipliers_search(gf7, L, k)
    except NotFoundError:
        assert not exists
    else:
        assert exists
        assert is_weakly_self_dual(code)
        assert int(code.multipliers[0]) == 1


def test_retrieval_code(gf7, G_D, c_code):
    d_code = retrieval_code(c_code, 2)
    assert np.array_equal(d_code.generator, G_D)
    assert is_weakly_self_dual(star_grs(c_code, d_code))

    gf8 = field_for_order(8)
    c8 = GrsCode.from_locators(gf8, default_locators(gf8, 6).tolist(), 2)
    assert is_self_dual(star_grs(c8, retrieval_code(c8, 2)))

    with pytest.raises(ConstraintViolatedError):
        retrieval_code(c_code, 4)
    with pytest.raises(ConstraintViolatedError):
        retrieval_code(GrsCode.from_locators(gf7, LOCATORS, 1), 1)


def test_split_wsd_generator(gf7, worked_scheme):
    bundle = split_wsd_generator(worked_scheme.s_code)
    assert bundle.H.shape == (2, 6)
    assert row_space_equal(bundle.H, gf7(H_ROWS))
    assert np.array_equal(bundle.F, gf7(F_ROWS))
    assert bundle.G_S.shape == (8, 12)
    assert np.array_equal(bundle.G_S[:4], block_diag(bundle.H, bundle.H))
    assert np.array_equal(bundle.G_S[4:], block_diag(bundle.F, bundle.F))
    assert np.array_equal(bundle.H_S, bundle.G_S[:4])
    assert not np.any(bundle.H @ worked_scheme.s_code.generator.T)


def test_split_requires_weakly_self_dual(c_code):
    # The [6, 3] storage code with unit multipliers is not self-dual.
    assert not is_weakly_self_dual(c_code)
    with pytest.raises(NotWeaklySelfDualError):
        split_wsd_generator(c_code)


def test_default_locators(gf7):
    assert default_locators(gf7, 6).tolist() == list(LOCATORS)
    assert default_locators(gf7, 7).tolist() == list(LOCATORS) + [0]
    gf8 = field_for_order(8)
    locators = default_locators(gf8, 8).tolist()
    assert locators[-1] == 0 and len(set(locators)) == 8
    with pytest.raises(InvalidCodeError):
        default_locators(gf7, 8)


def test_cartesian_pair(c_code):
    pair = CartesianPairCode(c_code)
    assert pair.length == 12 and pair.dim == 6
    assert np.array_equal(pair.generator, block_diag(c_code.generator, c_code.generator))
