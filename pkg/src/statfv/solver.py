"""Semi-discrete finite-volume scheme on the periodic unit square.

The scheme is the (2q+1)-point flux-difference form: selectable two-state
numerical flux (Rusanov, two-wave HLL, HLLC) applied to face traces from a
selectable reconstruction (none, MC limiter, two-point WENO), advanced in
time with SSP-RK2 (Heun) under a CFL condition, with positivity floors on
density and pressure after each stage.

Field-level sweeps run through the numba kernels in ``_kernels``; the
window-level operations here (``reconstruct``, ``numerical_flux``) mirror
the kernel arithmetic exactly, operation for operation, so both paths
produce bitwise-identical values.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from . import euler
from .errors import ConfigError, NonFinite, NonPhysicalState
from .euler import GasParams
from .grid import ConservedField, Grid

FLUXES = ("rusanov", "hll3", "hllc")
RECONSTRUCTIONS = ("none", "mc", "weno2")


@dataclass(frozen=True)
class SchemeConfig:
    flux: str = "hll3"
    reconstruction: str = "weno2"
    cfl: float = 0.45
    rho_floor: float = 1e-10
    p_floor: float = 1e-10

    def __post_init__(self):
        if self.flux not in FLUXES:
            raise ConfigError(f"unknown flux {self.flux!r}, expected one of {FLUXES}")
        if self.reconstruction not in RECONSTRUCTIONS:
            raise ConfigError(
                f"unknown reconstruction {self.reconstruction!r}, expected one of {RECONSTRUCTIONS}")
        if not 0.0 < self.cfl < 1.0:
            raise ConfigError(f"cfl must lie in (0, 1), got {self.cfl}")

    @property
    def stencil_q(self) -> int:
        """Half-width q of the (2q+1)-point scheme."""
        return 1 if self.reconstruction == "none" else 2


# ---------------------------------------------------------------------------
# window-level operations (the per-interface contract)

def _mc_sigma(um1, u0, up1):
    dm = u0 - um1
    dp = up1 - u0
    ctr = 0.5 * (dm + dp)
    m = np.minimum(np.abs(ctr), 2.0 * np.minimum(np.abs(dm), np.abs(dp)))
    return np.where(dm * dp > 0.0, np.copysign(m, ctr), 0.0)


def _weno_faces(um1, u0, up1):
    dm = u0 - um1
    dp = up1 - u0
    A = (_k.WENO_EPS + dm * dm) ** 2
    B = (_k.WENO_EPS + dp * dp) ** 2
    right = u0 + 0.5 * (B * dm + 2.0 * A * dp) / (B + 2.0 * A)
    left = u0 - 0.5 * (A * dp + 2.0 * B * dm) / (A + 2.0 * B)
    return right, left


def reconstruct(cells, cfg: SchemeConfig):
    """Face traces at the interface centered in a window of 2q cells.

    For q=1 the traces are the adjacent cell values. For q=2 the window is
    (u_{i-1}, u_i, u_{i+1}, u_{i+2}) and the traces are the right face of
    cell i and the left face of cell i+1.
    """
    cells = [np.asarray(c, dtype=np.float64) for c in cells]
    if len(cells) != 2 * cfg.stencil_q:
        raise ConfigError(
            f"window of {len(cells)} cells, need {2 * cfg.stencil_q} for {cfg.reconstruction!r}")
    if cfg.reconstruction == "none":
        return cells[0].copy(), cells[1].copy()
    um1, u0, up1, up2 = cells
    if cfg.reconstruction == "mc":
        left = u0 + 0.5 * _mc_sigma(um1, u0, up1)
        right = up1 - 0.5 * _mc_sigma(u0, up1, up2)
        return left, right
    left, _ = _weno_faces(um1, u0, up1)
    _, right = _weno_faces(u0, up1, up2)
    return left, right


def _pair_primitives(uL, uR, axis, gas):
    mn, mt = 1 + axis, 2 - axis
    gm1 = gas.gamma - 1.0
    out = []
    for u in (uL, uR):
        r = u[0]
        ri = 1.0 / r
        wn = u[mn] * ri
        wt = u[mt] * ri
        p = gm1 * (u[3] - 0.5 * (u[mn] * wn + u[mt] * wt))
        if not (r > 0.0 and p > 0.0):
            raise NonPhysicalState("non-physical trace state at interface")
        c = np.sqrt(gas.gamma * p * ri)
        out.append((r, wn, wt, p, c))
    return out


def _phys_flux_pair(u, wn, wt, p, axis):
    mn, mt = 1 + axis, 2 - axis
    f = np.empty(4)
    f[0] = u[mn]
    f[mn] = u[mn] * wn + p
    f[mt] = u[mn] * wt
    f[3] = (u[3] + p) * wn
    return f


def two_state_flux(uL, uR, axis: int, flux: str, gas: GasParams) -> np.ndarray:
    """Two-state numerical flux F(uL, uR) along ``axis``."""
    uL = np.asarray(uL, dtype=np.float64)
    uR = np.asarray(uR, dtype=np.float64)
    (rL, wnL, wtL, pL, cL), (rR, wnR, wtR, pR, cR) = _pair_primitives(uL, uR, axis, gas)
    fL = _phys_flux_pair(uL, wnL, wtL, pL, axis)
    fR = _phys_flux_pair(uR, wnR, wtR, pR, axis)
    mn, mt = 1 + axis, 2 - axis
    if flux == "rusanov":
        s = max(abs(wnL) + cL, abs(wnR) + cR)
        return 0.5 * (fL + fR) - 0.5 * s * (uR - uL)
    if flux == "hll3":
        sL = min(min(wnL - cL, wnR - cR), 0.0)
        sR = max(max(wnL + cL, wnR + cR), 0.0)
        q = sL / (sR - sL)
        return fL - q * ((fR - fL) - sR * (uR - uL))
    if flux == "hllc":
        sL = min(wnL - cL, wnR - cR)
        sR = max(wnL + cL, wnR + cR)
        if sL >= 0.0:
            return fL
        if sR <= 0.0:
            return fR
        qL = rL * (sL - wnL)
        qR = rR * (sR - wnR)
        ss = (pR - pL + wnL * qL - wnR * qR) / (qL - qR)
        if ss >= 0.0:
            coef = qL / (sL - ss)
            us = np.empty(4)
            us[0] = coef
            us[mn] = coef * ss
            us[mt] = coef * wtL
            us[3] = coef * (uL[3] / rL + (ss - wnL) * (ss + pL / qL))
            return fL + sL * (us - uL)
        coef = qR / (sR - ss)
        us = np.empty(4)
        us[0] = coef
        us[mn] = coef * ss
        us[mt] = coef * wtR
        us[3] = coef * (uR[3] / rR + (ss - wnR) * (ss + pR / qR))
        return fR + sR * (us - uR)
    raise ConfigError(f"unknown flux {flux!r}")


def numerical_flux(left_stencil, right_stencil, axis: int, cfg: SchemeConfig,
                   gas: GasParams) -> np.ndarray:
    """Interface flux from the q cells on each side of the interface."""
    window = list(left_stencil) + list(right_stencil)
    uL, uR = reconstruct(window, cfg)
    return two_state_flux(uL, uR, axis, cfg.flux, gas)


# ---------------------------------------------------------------------------
# field-level sweeps

_FLUX_X = {"rusanov": _k.flux_x_rusanov, "hll3": _k.flux_x_hll, "hllc": _k.flux_x_hllc}
_FLUX_Y = {"rusanov": _k.flux_y_rusanov, "hll3": _k.flux_y_hll, "hllc": _k.flux_y_hllc}
_TRACES_X = {"none": _k.copy_faces_x, "mc": _k.traces_x_mc, "weno2": _k.traces_x_weno}
_TRACES_Y = {"none": _k.copy_faces_y, "mc": _k.traces_y_mc, "weno2": _k.traces_y_weno}


class _Workspace:
    """Reused buffers for the directional sweeps at one resolution."""

    def __init__(self, n: int):
        self.n = n
        self.rfx = np.empty((4, n + 2, n))
        self.lfx = np.empty((4, n + 2, n))
        self.rfy = np.empty((4, n, n + 2))
        self.lfy = np.empty((4, n, n + 2))
        self.fx = np.empty((4, n + 1, n))
        self.fy = np.empty((4, n, n + 1))
        self.u1 = np.empty((4, n, n))
        self.u2 = np.empty((4, n, n))
        self.splane = np.empty((n, n))


def _fill_fluxes(u: np.ndarray, cfg: SchemeConfig, gas: GasParams, ws: _Workspace):
    _TRACES_X[cfg.reconstruction](u, ws.rfx, ws.lfx)
    _FLUX_X[cfg.flux](ws.rfx, ws.lfx, gas.gamma, 1, 2, ws.fx)
    _TRACES_Y[cfg.reconstruction](u, ws.rfy, ws.lfy)
    _FLUX_Y[cfg.flux](ws.rfy, ws.lfy, gas.gamma, 2, 1, ws.fy)


def semi_discrete_rhs(field: ConservedField, cfg: SchemeConfig, gas: GasParams) -> np.ndarray:
    """du/dt in flux-difference form, shape (4, n, n)."""
    ws = _Workspace(field.grid.n)
    _fill_fluxes(field.data, cfg, gas, ws)
    inv = 1.0 / field.grid.delta
    return -inv * ((ws.fx[:, 1:] - ws.fx[:, :-1]) + (ws.fy[:, :, 1:] - ws.fy[:, :, :-1]))


def max_wave_speed_field(field: ConservedField, gas: GasParams) -> float:
    """Max over cells and axes of |w| + c."""
    splane = np.empty((field.grid.n, field.grid.n))
    _k.speed_plane(field.data, gas.gamma, splane)
    maxs = float(splane.max())
    if not maxs < 1e300:
        raise NonFinite("non-finite wave speed in field", step=0)
    return maxs


@dataclass
class EvolveResult:
    snapshots: list
    steps: int
    floored_cells: int


def evolve(u0: ConservedField, times, cfg: SchemeConfig, gas: GasParams) -> EvolveResult:
    """Integrate from t=0, recording a snapshot at each requested time.

    Times must be sorted and nonnegative; each is hit exactly by clipping
    the last step. The trajectory is continuous: later snapshots continue
    from earlier ones.
    """
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ConfigError("output times must be sorted and nonnegative")
    n = u0.grid.n
    ws = _Workspace(n)
    u = np.ascontiguousarray(u0.data, dtype=np.float64).copy()
    _k.speed_plane(u, gas.gamma, ws.splane)
    maxs = float(ws.splane.max())
    if not maxs < 1e300:
        raise NonFinite("non-finite initial state", step=0)
    t = 0.0
    steps = 0
    floored_total = 0
    snapshots = []
    delta = u0.grid.delta
    for target in times:
        while t < target:
            dt = cfg.cfl * delta / maxs
            clipped = t + dt >= target
            if clipped:
                dt = target - t
            dtd = dt / delta
            _fill_fluxes(u, cfg, gas, ws)
            _k.div_update(u, u, ws.fx, ws.fy, dtd, 0.0, ws.u1)
            fl1 = _k.floor_and_speed(ws.u1, gas.gamma, cfg.rho_floor, cfg.p_floor, ws.splane)
            _fill_fluxes(ws.u1, cfg, gas, ws)
            _k.div_update(ws.u1, u, ws.fx, ws.fy, dtd, 0.5, ws.u2)
            fl2 = _k.floor_and_speed(ws.u2, gas.gamma, cfg.rho_floor, cfg.p_floor, ws.splane)
            steps += 1
            floored_total += fl1 + fl2
            maxs = float(ws.splane.max())
            if not maxs < 1e300:
                raise NonFinite(f"non-finite state during step {steps}", step=steps)
            u, ws.u2 = ws.u2, u
            t = target if clipped else t + dt
        snapshots.append(ConservedField(u0.grid, u.copy()))
    return EvolveResult(snapshots, steps, floored_total)


def advance(u0: ConservedField, t_end: float, cfg: SchemeConfig, gas: GasParams) -> ConservedField:
    """Numerical evolution operator: the state at t_end."""
    return evolve(u0, [t_end], cfg, gas).snapshots[0]


def weak_bv_sum(fields, times, s: float) -> float:
    """Trapezoid time quadrature of delta^2 * sum over axes and cells of
    |u_{i+e} - u_i|^s, with |.| the Euclidean norm of the 4-vector jump."""
    if s < 1.0:
        raise ConfigError("weak BV exponent must satisfy s >= 1")
    fields = list(fields)
    times = [float(t) for t in times]
    if len(fields) != len(times) or not fields:
        raise ConfigError("need one field per quadrature time")
    vals = []
    for f in fields:
        u = f.data
        acc = 0.0
        for axis in (1, 2):
            d = np.roll(u, -1, axis=axis) - u
            acc += float(np.sum(np.sqrt((d * d).sum(axis=0)) ** s))
        vals.append(f.grid.delta ** 2 * acc)
    total = 0.0
    for k in range(len(times) - 1):
        total += 0.5 * (vals[k] + vals[k + 1]) * (times[k + 1] - times[k])
    return total
