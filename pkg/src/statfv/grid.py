"""Uniform periodic grid on the unit square and the per-sample solution field."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonPhysicalState
from . import euler


@dataclass(frozen=True)
class Grid:
    """n x n equidistant cells on [0,1]^2 with periodic wrap.

    The mesh width is derived from n, so delta * n == 1 holds by
    construction.
    """

    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ConfigError(f"grid needs n >= 4, got {self.n}")

    @property
    def delta(self) -> float:
        return 1.0 / self.n

    def cell_centers(self) -> np.ndarray:
        """Midpoint coordinates along one axis, shape (n,)."""
        return (np.arange(self.n) + 0.5) / self.n

    def cell_index(self, coord: float) -> int:
        """Index of the cell whose interval contains ``coord`` (periodic)."""
        return int(np.floor(coord * self.n)) % self.n


@dataclass
class ConservedField:
    """Cell averages of the conserved state, data layout (4, n, n).

    data[c, i, j] is component c in the cell with midpoint
    ((i+0.5)/n, (j+0.5)/n).
    """

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.shape != (4, self.grid.n, self.grid.n):
            raise ConfigError(
                f"field data shape {self.data.shape} does not match grid n={self.grid.n}")

    def validate(self, gas: euler.GasParams) -> None:
        """Raise if the field contains non-finite or non-physical cells."""
        if not np.all(np.isfinite(self.data)):
            raise NonPhysicalState("field contains non-finite values")
        euler.to_primitive(self.data, gas)

    def copy(self) -> "ConservedField":
        return ConservedField(self.grid, self.data.copy())

    def cell_sums(self) -> np.ndarray:
        """Sum of each conserved component over all cells, shape (4,)."""
        return self.data.sum(axis=(1, 2))


def field_from_primitives(grid: Grid, q: np.ndarray, gas: euler.GasParams) -> ConservedField:
    """Build a field from a (4, n, n) primitive array."""
    return ConservedField(grid, euler.to_conserved(q, gas))


def component_plane(field: ConservedField, component: str, gas: euler.GasParams) -> np.ndarray:
    """Extract one conserved or primitive component as an (n, n) array.

    Conserved names: rho, mx, my, E.  Primitive names: wx, wy, p.
    """
    u = field.data
    if component == "rho":
        return u[euler.RHO]
    if component == "mx":
        return u[euler.MX]
    if component == "my":
        return u[euler.MY]
    if component == "E":
        return u[euler.EN]
    if component in ("wx", "wy"):
        return u[euler.MX if component == "wx" else euler.MY] / u[euler.RHO]
    if component == "p":
        return euler.pressure(u, gas)
    raise ConfigError(f"unknown component {component!r}")
