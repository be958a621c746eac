import numpy as np
import pytest

from jacobi_scattering import JacobiMatrix, analytic_smatrix, extract_smatrix, inner_symmetric_factory, rank3_smatrix
from jacobi_scattering.smatrix import ScatteringMatrix

RANK3_A = (0.9, 0.3, -0.2)
RANK3_B = (0.5, -0.4, 0.1)


@pytest.fixture(scope="session")
def free_S():
    return ScatteringMatrix.free()


@pytest.fixture(scope="session")
def rank3_S():
    return rank3_smatrix(*RANK3_A)


@pytest.fixture(scope="session")
def rank3_J():
    return JacobiMatrix.rank3(*RANK3_A)


@pytest.fixture(scope="session")
def delta2_S():
    return analytic_smatrix(inner_symmetric_factory(2))


@pytest.fixture(scope="session")
def delta4_S():
    return analytic_smatrix(inner_symmetric_factory(4))


@pytest.fixture(scope="session")
def shipped_smatrices():
    return {
        "free": ScatteringMatrix.free(),
        "rank3_a": extract_smatrix(JacobiMatrix.rank3(*RANK3_A)),
        "rank3_b": extract_smatrix(JacobiMatrix.rank3(*RANK3_B)),
        "delta_t2": analytic_smatrix(inner_symmetric_factory(2)),
        "delta_t4": analytic_smatrix(inner_symmetric_factory(4)),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
