"""Shared fixtures: small operators are module-scoped to amortize assembly."""

import numpy as np
import pytest

from imptik.mesh import make_grid
from imptik.operators import assemble, make_test_problem


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32)


@pytest.fixture(scope="session")
def T32(grid32):
    return assemble(grid32)


@pytest.fixture(scope="session")
def sine32(grid32):
    return make_test_problem("sine_1", grid32)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
