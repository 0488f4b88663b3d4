import numpy as np
import pytest

from orlx.grid import unit_square


@pytest.fixture
def grid16():
    return unit_square(16)


@pytest.fixture
def grid32():
    return unit_square(32)


@pytest.fixture
def grid64():
    return unit_square(64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
