"""Statistical observables of the empirical measure.

One-point moment fields, lattice structure functions with fitted scaling
exponents, Cauchy rates between resolutions, one/two-point histograms,
Wasserstein distances between correlation marginals (sorted-CDF formula for
one-point, exact assignment for two-point), and entropy/BV diagnostics.

Every estimator iterates completed samples in sample-index order and uses
compensated summation for the sample reduction, so results do not depend on
storage order or worker count.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _kernels as _k
from . import euler
from .driver import EmpiricalMeasure
from .errors import (CapExceeded, ConfigError, DegenerateCurve, EmptyEnsemble,
                     GridMismatch)
from .grid import ConservedField, component_plane


class _Kahan:
    """Compensated scalar/array accumulator."""

    def __init__(self, zero=0.0):
        self.s = zero
        self.c = zero * 0.0 if isinstance(zero, np.ndarray) else 0.0

    def add(self, x):
        y = x - self.c
        t = self.s + y
        self.c = (t - self.s) - y
        self.s = t


# ---------------------------------------------------------------------------
# one-point moments

@dataclass
class MomentField:
    grid: object
    mean: np.ndarray
    variance: np.ndarray
    component: str | None = None


def mean_variance(mu: EmpiricalMeasure, time_index: int, component: str | None = None) -> MomentField:
    """Per-cell sample mean and population variance.

    With component=None the moments cover all four conserved components,
    shape (4, n, n); otherwise a single (n, n) plane of the chosen
    conserved or primitive component.
    """
    def plane(f):
        return f.data if component is None else component_plane(f, component, mu.gas)

    count = 0
    acc = None
    for _, f in mu.iter_fields(time_index):
        v = plane(f)
        if acc is None:
            acc = _Kahan(np.zeros_like(v))
        acc.add(v)
        count += 1
    if count == 0:
        raise EmptyEnsemble("no completed samples")
    mean = acc.s / count
    acc2 = _Kahan(np.zeros_like(mean))
    for _, f in mu.iter_fields(time_index):
        d = plane(f) - mean
        acc2.add(d * d)
    variance = np.maximum(acc2.s / count, 0.0)
    return MomentField(mu.grid, mean, variance, component)


# ---------------------------------------------------------------------------
# structure functions

@dataclass
class StructureFunctionCurve:
    p: float
    radii: np.ndarray          # r = ell * delta, increasing
    omega: np.ndarray          # raw lattice omega_r^p
    values: np.ndarray         # omega ** (1/p)
    theta: float               # fitted exponent of values ~ C r^theta
    fit_residual: float
    n_samples: int


def _radii_to_ells(radii, n: int):
    delta = 1.0 / n
    ells = []
    for r in radii:
        ell = int(round(r / delta))
        if ell < 1 or abs(ell * delta - r) > 1e-9:
            raise ConfigError(f"radius {r} is not a positive multiple of delta=1/{n}")
        if 2 * ell + 1 > n:
            raise ConfigError(f"radius {r} not resolvable on an n={n} grid")
        ells.append(ell)
    if ells != sorted(ells):
        raise ConfigError("radii must be increasing")
    return ells


def default_radii(n: int) -> np.ndarray:
    """Multiples of delta from delta up to 1/32 (or the resolvable limit)."""
    lmax = max(1, min(n // 32, (n - 1) // 2))
    return np.arange(1, lmax + 1) / n


def increment_modulus_plane(plane: np.ndarray, ells, p: float) -> np.ndarray:
    """Lattice increment modulus of one scalar field at each half-width ell.

    For each ell: delta^2 * sum_i (1/|N_ell|) sum_{j in N_ell(i)}
    |a(j) - a(i)|^p with N_ell the periodic square neighborhood of
    half-width ell cells, center excluded.
    """
    plane = np.ascontiguousarray(plane, dtype=np.float64)
    n = plane.shape[0]
    lmax = max(ells)
    rows = np.empty(n)
    ring_sums = np.zeros(lmax + 1)
    for ell in range(1, lmax + 1):
        acc = _Kahan()
        for dx in range(-ell, ell + 1):
            for dy in range(-ell, ell + 1):
                if max(abs(dx), abs(dy)) != ell:
                    continue
                _k.offset_abs_pow_rowsums(plane, dx % n, dy % n, float(p), rows)
                acc.add(float(np.sum(rows)))
        ring_sums[ell] = acc.s
    cum = np.cumsum(ring_sums)
    out = np.empty(len(ells))
    for i, ell in enumerate(ells):
        card = (2 * ell + 1) ** 2 - 1
        out[i] = cum[ell] / (card * n * n)
    return out


def _fit_theta(radii, values):
    mask = values > 0
    if mask.sum() < len(values):
        warnings.warn("structure function has zero values; excluded from the theta fit")
    if mask.sum() < 2:
        return float("nan"), float("nan")
    lr = np.log(radii[mask])
    lv = np.log(values[mask])
    coef, res = np.polyfit(lr, lv, 1, full=True)[:2]
    resid = float(np.sqrt(res[0] / mask.sum())) if len(res) else 0.0
    return float(coef[0]), resid


def structure_function(mu: EmpiricalMeasure, time_index: int, p: float,
                       radii=None, component: str = "rho") -> StructureFunctionCurve:
    """Monte Carlo average of the lattice increment modulus, with a
    least-squares power-law fit of omega^(1/p) against r."""
    n = mu.grid.n
    radii = default_radii(n) if radii is None else np.asarray(sorted(radii), dtype=np.float64)
    ells = _radii_to_ells(radii, n)
    acc = _Kahan(np.zeros(len(ells)))
    count = 0
    for _, f in mu.iter_fields(time_index):
        acc.add(increment_modulus_plane(component_plane(f, component, mu.gas), ells, p))
        count += 1
    if count == 0:
        raise EmptyEnsemble("no completed samples")
    omega = acc.s / count
    values = omega ** (1.0 / p)
    theta, resid = _fit_theta(radii, values)
    return StructureFunctionCurve(p, radii, omega, values, theta, resid, count)


def structure_function_time_integral(mu: EmpiricalMeasure, p: float, radii=None,
                                     component: str = "rho") -> StructureFunctionCurve:
    """Trapezoid time quadrature of the increment modulus over all output
    times, rooted: (integral_0^T omega_r^p dt)^(1/p). The time sections are
    the workhorse; this is the integrated variant for completeness."""
    if len(mu.times) < 2:
        raise ConfigError("time integral needs at least two output times")
    n = mu.grid.n
    radii = default_radii(n) if radii is None else np.asarray(sorted(radii), dtype=np.float64)
    curves = [structure_function(mu, ti, p, radii, component) for ti in range(len(mu.times))]
    omega = np.zeros(len(radii))
    for k in range(len(mu.times) - 1):
        omega += 0.5 * (curves[k].omega + curves[k + 1].omega) * (mu.times[k + 1] - mu.times[k])
    values = omega ** (1.0 / p)
    theta, resid = _fit_theta(radii, values)
    return StructureFunctionCurve(p, radii, omega, values, theta, resid,
                                  curves[0].n_samples)


@dataclass
class ScalingReport:
    constant: float
    s: float
    failed: bool


def scaling_diagnostic(curve: StructureFunctionCurve, s: float) -> ScalingReport:
    """Smallest C with value(ell*delta) <= C * ell^(1/s) * value(delta) over
    the curve; C > 10 flags a scaling-hypothesis failure."""
    if len(curve.radii) < 3:
        raise ConfigError("scaling diagnostic needs >= 3 radii including delta")
    base = curve.values[0]
    if base == 0.0:
        raise DegenerateCurve("structure function vanishes at r = delta")
    ell = curve.radii / curve.radii[0]
    c = float(np.max(curve.values / (ell ** (1.0 / s) * base)))
    return ScalingReport(c, s, c > 10.0)


# ---------------------------------------------------------------------------
# cross-resolution comparisons

def restrict_plane(plane: np.ndarray) -> np.ndarray:
    """2x2 cell averaging onto the coarser grid."""
    n = plane.shape[0]
    if n % 2:
        raise GridMismatch("cannot restrict an odd-sized grid")
    return plane.reshape(n // 2, 2, n // 2, 2).mean(axis=(1, 3))


def _restriction_depth(n_coarse: int, n_fine: int) -> int:
    if n_fine == n_coarse:
        return 0
    if n_fine == 2 * n_coarse:
        return 1
    raise GridMismatch(f"grids n={n_fine} and n={n_coarse} are not a 2x refinement pair")


def _lp_norm(diff: np.ndarray, delta: float, p: float) -> float:
    return float((delta ** 2 * np.sum(np.abs(diff) ** p)) ** (1.0 / p))


def cauchy_rate(mu_coarse: EmpiricalMeasure, mu_fine: EmpiricalMeasure, time_index: int,
                functional: str = "mean", component: str = "rho", norm_p: float = 1.0,
                structure_p: float = 2.0, radius: float | None = None) -> float:
    """L^p distance between a statistic computed at delta and at delta/2,
    the fine field restricted to the coarse grid by 2x2 averaging."""
    nc, nf = mu_coarse.grid.n, mu_fine.grid.n
    depth = _restriction_depth(nc, nf)

    def restricted(plane):
        return restrict_plane(plane) if depth else plane

    if functional in ("mean", "variance"):
        mc = mean_variance(mu_coarse, time_index, component)
        mf = mean_variance(mu_fine, time_index, component)
        a = mc.mean if functional == "mean" else mc.variance
        b = mf.mean if functional == "mean" else mf.variance
        return _lp_norm(a - restricted(b), mu_coarse.grid.delta, norm_p)
    if functional == "sample":
        common = ({r.index for r in mu_coarse.completed}
                  & {r.index for r in mu_fine.completed})
        if not common:
            raise EmptyEnsemble("no common completed sample")
        m = min(common)
        a = component_plane(mu_coarse.field(time_index, m), component, mu_coarse.gas)
        b = component_plane(mu_fine.field(time_index, m), component, mu_fine.gas)
        return _lp_norm(a - restricted(b), mu_coarse.grid.delta, norm_p)
    if functional == "structure":
        radii = np.array([radius]) if radius is not None else default_radii(nc)
        ca = structure_function(mu_coarse, time_index, structure_p, radii, component)
        cb = structure_function(mu_fine, time_index, structure_p, radii, component)
        return float(np.mean(np.abs(ca.values - cb.values)))
    raise ConfigError(f"unknown functional {functional!r}")


# ---------------------------------------------------------------------------
# Wasserstein distances between correlation marginals

@dataclass
class WassersteinReport:
    k: int
    p: int
    value: float
    sampling: str


def w1_sorted(a: np.ndarray, b: np.ndarray) -> float:
    """W1 between two scalar empirical measures via the CDF formula."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    # unequal sizes: integrate |F_a - F_b| over the merged support
    grid = np.sort(np.concatenate([a, b]))
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.sum(np.abs(fa - fb)[:-1] * np.diff(grid)))


def _component_samples(mu: EmpiricalMeasure, time_index: int, component: str,
                       restrict: int = 0) -> np.ndarray:
    planes = []
    for _, f in mu.iter_fields(time_index):
        pl = component_plane(f, component, mu.gas)
        if restrict:
            pl = restrict_plane(pl)
        planes.append(pl)
    if not planes:
        raise EmptyEnsemble("no completed samples")
    return np.stack(planes)


def wasserstein_1pt(mu_a: EmpiricalMeasure, mu_b: EmpiricalMeasure, time_index: int,
                    component: str = "rho") -> WassersteinReport:
    """Cell-wise W1 between the one-point marginals, averaged over the domain.

    On a 2x refinement pair the finer samples are restricted to the coarse
    grid first.
    """
    na, nb = mu_a.grid.n, mu_b.grid.n
    n = min(na, nb)
    a = _component_samples(mu_a, time_index, component, _restriction_depth(n, na))
    b = _component_samples(mu_b, time_index, component, _restriction_depth(n, nb))
    if a.shape[0] == b.shape[0]:
        w1 = np.mean(np.abs(np.sort(a, axis=0) - np.sort(b, axis=0)), axis=0)
        value = float(np.sum(w1)) / (n * n)
    else:
        acc = _Kahan()
        for i in range(n):
            for j in range(n):
                acc.add(w1_sorted(a[:, i, j], b[:, i, j]))
        value = acc.s / (n * n)
    return WassersteinReport(1, 1, value, f"all {n}x{n} cells")


def default_eval_pairs(n: int, points_per_axis: int = 10):
    """Spatial evaluation pairs for the two-point marginal: a lattice of
    points_per_axis cells per coordinate of each of the two points."""
    idx = [int(((t + 0.5) / points_per_axis) * n) % n for t in range(points_per_axis)]
    pts = [(i, j) for i in idx for j in idx]
    return [(x, y) for x in pts for y in pts]


def wasserstein_2pt(mu_a: EmpiricalMeasure, mu_b: EmpiricalMeasure, time_index: int,
                    component: str = "rho", eval_pairs=None, points_per_axis: int = 10,
                    cap: int = 1024) -> WassersteinReport:
    """W1 in R^2 between the two-point joint marginals at evaluation pairs,
    via an exact assignment solve on the M x M Euclidean cost matrix."""
    na, nb = mu_a.grid.n, mu_b.grid.n
    n = min(na, nb)
    a = _component_samples(mu_a, time_index, component, _restriction_depth(n, na))
    b = _component_samples(mu_b, time_index, component, _restriction_depth(n, nb))
    ma, mb = a.shape[0], b.shape[0]
    if ma != mb:
        raise ConfigError("two-point Wasserstein needs equal completed sample counts")
    if ma > cap:
        raise CapExceeded(f"assignment is O(M^3); M={ma} exceeds cap={cap}")
    if eval_pairs is None:
        eval_pairs = default_eval_pairs(n, points_per_axis)
    acc = _Kahan()
    for (x, y) in eval_pairs:
        pa = np.stack([a[:, x[0], x[1]], a[:, y[0], y[1]]], axis=1)
        pb = np.stack([b[:, x[0], x[1]], b[:, y[0], y[1]]], axis=1)
        d = pa[:, None, :] - pb[None, :, :]
        cost = np.sqrt(np.sum(d * d, axis=2))
        rows, cols = linear_sum_assignment(cost)
        acc.add(float(cost[rows, cols].sum()) / ma)
    return WassersteinReport(2, 1, acc.s / len(eval_pairs), f"{len(eval_pairs)} point pairs")


# ---------------------------------------------------------------------------
# histograms of the correlation marginals

@dataclass
class Histogram2pt:
    x: tuple
    y: tuple
    component: str
    edges_x: np.ndarray
    edges_y: np.ndarray
    counts: np.ndarray


def _default_edges(values: np.ndarray, bins: int) -> np.ndarray:
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        lo -= 0.5
        hi += 0.5
    else:
        pad = 0.01 * (hi - lo)
        lo -= pad
        hi += pad
    return np.linspace(lo, hi, bins + 1)


def _point_samples(mu, time_index, point, component):
    vals = [component_plane(f, component, mu.gas)[point[0], point[1]]
            for _, f in mu.iter_fields(time_index)]
    if not vals:
        raise EmptyEnsemble("no completed samples")
    return np.array(vals)


def histogram_1pt(mu: EmpiricalMeasure, time_index: int, x, component: str = "rho",
                  bins: int = 64, edges=None):
    """One-point empirical histogram at cell x; returns (edges, counts)."""
    vals = _point_samples(mu, time_index, x, component)
    edges = _default_edges(vals, bins) if edges is None else np.asarray(edges)
    counts, _ = np.histogram(vals, bins=edges)
    return edges, counts


def histogram_2pt(mu: EmpiricalMeasure, time_index: int, x, y, component: str = "rho",
                  bins: int = 64, edges_x=None, edges_y=None) -> Histogram2pt:
    """Joint histogram of (u_m(x), u_m(y)) over completed samples."""
    vx = _point_samples(mu, time_index, x, component)
    vy = _point_samples(mu, time_index, y, component)
    edges_x = _default_edges(vx, bins) if edges_x is None else np.asarray(edges_x)
    edges_y = _default_edges(vy, bins) if edges_y is None else np.asarray(edges_y)
    counts, _, _ = np.histogram2d(vx, vy, bins=[edges_x, edges_y])
    return Histogram2pt(tuple(x), tuple(y), component, edges_x, edges_y, counts)


# ---------------------------------------------------------------------------
# entropy and BV diagnostics

@dataclass
class EntropySeries:
    times: np.ndarray
    values: np.ndarray
    increase_indices: list
    non_increasing: bool


def total_entropy(field: ConservedField, gas) -> float:
    """delta^2 * sum of the entropy density over cells."""
    return float(field.grid.delta ** 2 * np.sum(euler.entropy(field.data, gas)))


def entropy_diagnostic(mu: EmpiricalMeasure, rel_tol: float = 1e-8) -> EntropySeries:
    """Ensemble-averaged total entropy per output time; flags increases
    beyond rel_tol (relative to max(1, |value|)) between consecutive
    outputs."""
    if len(mu.times) < 2:
        raise ConfigError("entropy diagnostic needs at least two output times")
    values = []
    for ti in range(len(mu.times)):
        acc = _Kahan()
        count = 0
        for _, f in mu.iter_fields(ti):
            acc.add(total_entropy(f, mu.gas))
            count += 1
        if count == 0:
            raise EmptyEnsemble("no completed samples")
        values.append(acc.s / count)
    values = np.array(values)
    jumps = [k + 1 for k in range(len(values) - 1)
             if values[k + 1] - values[k] > rel_tol * max(1.0, abs(values[k]))]
    return EntropySeries(np.array(mu.times), values, jumps, not jumps)


def bv_norm(field: ConservedField, component: str = "rho", gas=None) -> float:
    """delta * sum over axes and cells of |periodic neighbor difference|."""
    plane = component_plane(field, component, gas if gas is not None else euler.GasParams())
    total = 0.0
    for axis in (0, 1):
        total += float(np.sum(np.abs(np.roll(plane, -1, axis=axis) - plane)))
    return field.grid.delta * total
