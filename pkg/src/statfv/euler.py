"""2D compressible Euler system: state conversions, fluxes, wave speeds, entropy.

States are numpy arrays with the component axis leading:

* conserved  ``u = (rho, mx, my, E)`` with momenta ``m = rho*w``,
* primitive  ``q = (rho, wx, wy, p)``.

A single state is shape ``(4,)``; a field is ``(4, n, n)``. All operations
broadcast over trailing axes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonPhysicalState

# conserved component indices
RHO, MX, MY, EN = 0, 1, 2, 3

#: names of the conserved components, in storage order
CONSERVED_NAMES = ("rho", "mx", "my", "E")
#: names of the primitive components, in storage order
PRIMITIVE_NAMES = ("rho", "wx", "wy", "p")


@dataclass(frozen=True)
class GasParams:
    """Ideal-gas parameters. gamma = 1.4 everywhere unless overridden."""

    gamma: float = 1.4

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")


def conserved(rho, mx, my, en) -> np.ndarray:
    """Stack conserved components along a new leading axis."""
    return np.stack(np.broadcast_arrays(
        np.asarray(rho, dtype=np.float64), np.asarray(mx, dtype=np.float64),
        np.asarray(my, dtype=np.float64), np.asarray(en, dtype=np.float64)))


def primitive(rho, wx, wy, p) -> np.ndarray:
    """Stack primitive components along a new leading axis."""
    return np.stack(np.broadcast_arrays(
        np.asarray(rho, dtype=np.float64), np.asarray(wx, dtype=np.float64),
        np.asarray(wy, dtype=np.float64), np.asarray(p, dtype=np.float64)))


def to_conserved(q: np.ndarray, gas: GasParams) -> np.ndarray:
    """Primitive -> conserved. E = p/(gamma-1) + rho*(wx^2+wy^2)/2."""
    rho, wx, wy, p = q[0], q[1], q[2], q[3]
    en = p / (gas.gamma - 1.0) + 0.5 * rho * (wx * wx + wy * wy)
    return np.stack(np.broadcast_arrays(rho, rho * wx, rho * wy, en))


def to_primitive(u: np.ndarray, gas: GasParams) -> np.ndarray:
    """Conserved -> primitive. Raises NonPhysicalState on rho <= 0 or p <= 0."""
    rho = u[RHO]
    if not np.all(rho > 0.0):
        raise NonPhysicalState("non-positive density")
    ri = 1.0 / rho
    wx = u[MX] * ri
    wy = u[MY] * ri
    p = (gas.gamma - 1.0) * (u[EN] - 0.5 * (u[MX] * wx + u[MY] * wy))
    if not np.all(p > 0.0):
        raise NonPhysicalState("non-positive pressure")
    return np.stack(np.broadcast_arrays(rho, wx, wy, p))


def pressure(u: np.ndarray, gas: GasParams) -> np.ndarray:
    """Pressure of a conserved state (no positivity check)."""
    ri = 1.0 / u[RHO]
    return (gas.gamma - 1.0) * (u[EN] - 0.5 * (u[MX] * u[MX] + u[MY] * u[MY]) * ri)


def physical_flux(u: np.ndarray, axis: int, gas: GasParams) -> np.ndarray:
    """Euler flux column along ``axis`` (0 = x, 1 = y)."""
    q = to_primitive(u, gas)
    p = q[3]
    wn = q[1 + axis]
    wt = q[2 - axis]
    mn = u[1 + axis]
    f = np.empty_like(np.broadcast_arrays(u)[0])
    f[RHO] = mn
    f[1 + axis] = mn * wn + p
    f[2 - axis] = mn * wt
    f[EN] = (u[EN] + p) * wn
    return f


def max_wave_speed(u: np.ndarray, axis: int, gas: GasParams):
    """|w_axis| + c with c = sqrt(gamma*p/rho)."""
    q = to_primitive(u, gas)
    c = np.sqrt(gas.gamma * q[3] / q[0])
    return np.abs(q[1 + axis]) + c


def entropy(u: np.ndarray, gas: GasParams):
    """Mathematical entropy eta(u) = -rho*log(p/rho^gamma)/(gamma-1).

    Used purely as a dissipation diagnostic; convex in the conserved
    variables.
    """
    q = to_primitive(u, gas)
    rho, p = q[0], q[3]
    return -rho * np.log(p * rho ** (-gas.gamma)) / (gas.gamma - 1.0)
