import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("lamelab", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("lamelab")

TAU = 0.2 + 1.1j


@pytest.fixture(scope="session")
def L():
    from lamelab import Lattice
    return Lattice(TAU)


@pytest.fixture(scope="session")
def oracle():
    from oracle import ThetaOracle
    return ThetaOracle(TAU)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def cell_points(rng, L, k, margin=0.05):
    """k random points in the open cell, kept away from the lattice."""
    u = rng.uniform(margin, 1 - margin, k)
    v = rng.uniform(margin, 1 - margin, k)
    return u + v * L.tau
