import numpy as np
import pytest

from conecalc import presets, spaces


def radial_bump(x, a=0.2, b=0.8):
    """Smooth compactly supported bump on (a, b), peak value 1."""
    y = np.zeros_like(np.asarray(x, dtype=float))
    m = (x > a) & (x < b)
    xi = (x[m] - a) / (b - a)
    y[m] = np.exp(1.0 - 1.0 / (4.0 * xi * (1.0 - xi)))
    return y


def radial_bump_ds(x, a=0.2, b=0.8):
    """d/dx of radial_bump, analytic."""
    y = np.zeros_like(np.asarray(x, dtype=float))
    m = (x > a) & (x < b)
    xi = (x[m] - a) / (b - a)
    y[m] = np.exp(1.0 - 1.0 / (4.0 * xi * (1.0 - xi))) \
        * ((1.0 - 2.0 * xi) / (4.0 * xi**2 * (1.0 - xi)**2)) / (b - a)
    return y


@pytest.fixture(scope="session")
def cone2d():
    return presets.cone2d_laplacian(8)


@pytest.fixture(scope="session")
def fine_radial_grid():
    return spaces.LogRadialGrid.make(4097, 16.0, max_mode=0)
