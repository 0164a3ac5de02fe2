import numpy as np
import pytest

from zcf.gbdt import mkdv_soliton, skew_reduction_node
from zcf.mkdv import build_mkdv_pair, zero_potential
from zcf.pencil import Domain2D

# one-soliton used throughout: a = 0.4 + 0.5i, Pi1(0) = [1, 1]  =>  sup|v| = 2 Im a = 1
SOLITON_A = 0.4 + 0.5j


@pytest.fixture(scope="session")
def soliton_node():
    return skew_reduction_node(np.array([[SOLITON_A]]), np.array([[1.0, 1.0]]))


@pytest.fixture(scope="session")
def soliton(soliton_node):
    """(potential, field) on the half-line in x, t in [0, 1]."""
    return mkdv_soliton(soliton_node, Domain2D(np.inf, 1.0))


@pytest.fixture(scope="session")
def soliton_pair(soliton):
    return build_mkdv_pair(soliton[0])


@pytest.fixture(scope="session")
def two_soliton():
    A1 = np.diag([0.3 + 0.6j, -0.2 + 0.4j])
    Pi1 = np.array([[1.0, 0.5], [0.7, 1.0]])
    return mkdv_soliton(skew_reduction_node(A1, Pi1), Domain2D(np.inf, 1.0))


@pytest.fixture(scope="session")
def zero_pair():
    return build_mkdv_pair(zero_potential(1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
