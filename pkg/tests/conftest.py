import numpy as np
import pytest

from gjmslab.bubbles import smooth_window
from gjmslab.grids import GridKind, RadialFunction, Space, uniform_grid


def windowed_gaussian(width: float, support: float):
    """A genuinely C_c-infinity radial bump: Gaussian times a smooth window."""

    def profile(r):
        r = np.asarray(r, dtype=float)
        return np.exp(-r * r / width) * smooth_window(r, 0.6 * support, support)

    return profile


def hyperbolic_bump(width=0.5, support=3.0, panel_width=0.05):
    grid = uniform_grid(support, GridKind.HYPERBOLIC_GEODESIC, panel_width=panel_width)
    return RadialFunction.from_profile(windowed_gaussian(width, support), grid,
                                       support, Space.HYPERBOLIC)


def euclidean_bump(width=0.1, support=0.8, panel_width=0.01):
    grid = uniform_grid(support, GridKind.EUCLIDEAN, panel_width=panel_width)
    return RadialFunction.from_profile(windowed_gaussian(width, support), grid,
                                       support, Space.EUCLIDEAN)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
