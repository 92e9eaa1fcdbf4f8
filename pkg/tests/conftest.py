import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chainscope.model import build_grid_model, build_subshift_model, from_matrix  # noqa: E402


@pytest.fixture
def two_point():
    """Two fixed points at distance 1."""
    return from_matrix([[0.0, 1.0], [1.0, 0.0]], [0, 1], name="two-point")


@pytest.fixture(scope="session")
def full_shift3():
    return build_subshift_model(["0", "1"], [], 3)


@pytest.fixture(scope="session")
def doubling9():
    return build_grid_model("doubling", 2.0**-9)


@pytest.fixture(scope="session")
def rotation16():
    return build_grid_model("rotation", 1 / 16, {"alpha": 0.5})


@pytest.fixture(scope="session")
def identity16():
    return build_grid_model("identity", 1 / 16)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
