import numpy as np
import pytest

from statfv import GasParams, Grid
from statfv.grid import ConservedField
from statfv import euler


@pytest.fixture(scope="session")
def gas():
    return GasParams()


def random_primitive_states(rng, count):
    """Physical primitive states with O(1) magnitudes."""
    rho = 0.1 + 3.0 * rng.random(count)
    wx = 2.0 * rng.standard_normal(count)
    wy = 2.0 * rng.standard_normal(count)
    p = 0.05 + 4.0 * rng.random(count)
    return np.stack([rho, wx, wy, p])


def constant_field(grid: Grid, prim, gas: GasParams) -> ConservedField:
    q = np.broadcast_to(np.asarray(prim, dtype=np.float64)[:, None, None],
                        (4, grid.n, grid.n)).copy()
    return ConservedField(grid, euler.to_conserved(q, gas))


def random_field(grid: Grid, rng, gas: GasParams) -> ConservedField:
    q = np.empty((4, grid.n, grid.n))
    q[0] = 0.5 + rng.random((grid.n, grid.n))
    q[1] = 0.5 * rng.standard_normal((grid.n, grid.n))
    q[2] = 0.5 * rng.standard_normal((grid.n, grid.n))
    q[3] = 0.5 + rng.random((grid.n, grid.n))
    return ConservedField(grid, euler.to_conserved(q, gas))
