import math

import numpy as np
import pytest

from solcqed.core import ReducedParams


@pytest.fixture(scope="session")
def acceptance_grid():
    """101 x 101 nodes: delta/pi in [-4, 4], eta in (0, 4 pi]."""
    delta = np.linspace(-4, 4, 101) * math.pi
    eta = np.linspace(0, 4 * math.pi, 102)[1:]
    D, E = np.meshgrid(delta, eta)
    return E, D


def grid_params(grid, n):
    E, D = grid
    return ReducedParams(E, D, n)
