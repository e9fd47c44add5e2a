import numpy as np
import pytest

from ricciflow.catalog import catalog
from ricciflow.homspace import split_u
from ricciflow.liealg import LieAlgebra, SemidirectData


@pytest.fixture(scope="session")
def e1_split():
    return catalog("E1_su2xR_R3").split()


@pytest.fixture(scope="session")
def e2_split():
    return catalog("E2_su2_biinv").split()


@pytest.fixture(scope="session")
def e4_split():
    return catalog("E4_preflat_E2").split()


@pytest.fixture(scope="session")
def e5_split():
    return catalog("E5_two_weights").split()


@pytest.fixture(scope="session")
def hyperbolic_split():
    """R acting on R by the identity: the hyperbolic plane as R |x R."""
    d = SemidirectData(LieAlgebra(np.zeros((1, 1, 1)), ["X"]), 1, np.ones((1, 1, 1)))
    return split_u(d, ())
