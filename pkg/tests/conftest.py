import numpy as np
import pytest

from ps3lab.membrane import MembraneSpec
from ps3lab.ratfun import fixture

# Matched PB1 specs for the R_B1 fixture, frozen from earlier matcher runs
# (residual ~1e-11) so that reconstruction tests do not pay for a match.
MATCHED_B1 = {
    1: MembraneSpec("PB1", 1.038295351553281, 1.9248444917238503, 10.27949934221926, 1, 0),
    2: MembraneSpec("PB1", 1.00072135630395, 1.2480095035949366, 5.585303538621895, 2, 0),
}

# Direct-solver eigenvalues of R_B1 at N=64 (self-consistent oracle, frozen).
LAMBDA_B1 = (1.038295351553605, 1.000721356303949)


@pytest.fixture(scope="session")
def R_A():
    return fixture("A")


@pytest.fixture(scope="session")
def R_B1():
    return fixture("B1")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def mobius(m, p):
    return (m.a * p + m.b) / (m.c * p + m.d)
