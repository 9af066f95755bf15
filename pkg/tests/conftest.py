import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mhd2d.spectral import make_grid

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

TWO_PI = 2 * math.pi


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16, 16)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32, 32)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64, 64)


def random_coeffs(grid, seed, band=None, mean_zero=True):
    """Dealiased (or band-limited) coefficients of a random real field."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.shape)
    c = grid.forward(v)
    keep = grid.dealias_mask.copy()
    if band is not None:
        keep &= (np.abs(grid.kx_index)[:, None] <= band) & (np.arange(grid.ny // 2 + 1)[None, :] <= band)
    c = np.where(keep, c, 0.0)
    if mean_zero:
        c[0, 0] = 0.0
    return c
