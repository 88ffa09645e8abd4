import numpy as np
import pytest

from qpir_lab.fields import FieldSpec, field_make
from qpir_lab.linalg import MatrixGF
from qpir_lab.protocol import QpirScheme, StorageSystem, encode_storage, random_files
from qpir_lab.verify import worked_example_scheme

# [6, 3] primitive Reed-Solomon storage over GF(7), t = 2, locators the powers of 3.
LOCATORS = (1, 3, 2, 6, 4, 5)
G_C_ROWS = [
    [1, 1, 1, 1, 1, 1],
    [1, 3, 2, 6, 4, 5],
    [1, 2, 4, 1, 2, 4],
]
G_D_ROWS = [
    [1, 1, 1, 1, 1, 1],
    [1, 3, 2, 6, 4, 5],
]
H_ROWS = [
    [1, 3, 2, 6, 4, 5],
    [1, 2, 4, 1, 2, 4],
]
F_ROWS = [
    [1, 1, 1, 1, 1, 1],
    [1, 6, 1, 6, 1, 6],
]


@pytest.fixture(scope="session")
def gf7() -> FieldSpec:
    return field_make(7)


@pytest.fixture(scope="session")
def worked_scheme() -> QpirScheme:
    return worked_example_scheme(m=2)


@pytest.fixture(scope="session")
def G_C(gf7) -> MatrixGF:
    return gf7(G_C_ROWS)


@pytest.fixture(scope="session")
def G_D(gf7) -> MatrixGF:
    return gf7(G_D_ROWS)


@pytest.fixture
def worked_storage(worked_scheme) -> StorageSystem:
    rng = np.random.default_rng(0)
    return encode_storage(
        random_files(worked_scheme, rng), worked_scheme.storage_code, worked_scheme.params.beta
    )
