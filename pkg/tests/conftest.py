import numpy as np
import pytest

from bardina_strip.strip_grid import StripDomain, make_grid


@pytest.fixture
def small_grid():
    return make_grid(StripDomain(2.0 * np.pi, 1.0), 16, 17)


@pytest.fixture
def medium_grid():
    return make_grid(StripDomain(2.0 * np.pi, 1.0), 32, 33)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
