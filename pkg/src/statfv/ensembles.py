"""Random initial-data ensembles: perturbed Kelvin-Helmholtz shear layers,
Richtmeyer-Meshkov shock/interface data, and fractional Brownian velocity
fields via random midpoint displacement.

Randomness is counter-based: every sample owns a Philox stream keyed by
(master_seed, sample_index), with disjoint counter blocks per sub-stream,
so generation is reproducible regardless of evaluation order or thread
assignment. Gaussians come from the stream through the inverse normal CDF,
never from rejection sampling.
"""

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from . import euler
from .errors import ConfigError
from .euler import GasParams
from .grid import ConservedField, Grid

FAMILIES = ("kelvin_helmholtz", "richtmeyer_meshkov", "fractional_brownian")
DISTRIBUTIONS = ("uniform01", "stdnormal")

# Kelvin-Helmholtz states: (rho, wx, wy, p), inner band vs outer region
KH_INNER = (2.0, -0.5, 0.0, 2.5)
KH_OUTER = (1.0, 0.5, 0.0, 2.5)
# Richtmeyer-Meshkov: pressure disc radius, density interface base radius
RM_P_RADIUS = 0.1
RM_RHO_RADIUS = 0.25
RM_CENTER = (0.5, 0.5)
# fractional Brownian motion background
FBM_RHO = 4.0
FBM_P = 2.5


@dataclass(frozen=True)
class EnsembleSpec:
    family: str
    epsilon: float = 0.01
    modes: int = 10
    hurst: float = 0.5
    distribution: str = "uniform01"
    master_seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.epsilon < 0.0:
            raise ConfigError(f"perturbation amplitude must be >= 0, got {self.epsilon}")
        if self.modes < 1:
            raise ConfigError(f"mode count must be >= 1, got {self.modes}")
        if not 0.0 < self.hurst < 1.0:
            raise ConfigError(f"Hurst index must lie in (0, 1), got {self.hurst}")
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(
                f"unknown distribution {self.distribution!r}, expected one of {DISTRIBUTIONS}")


@dataclass(frozen=True)
class SampleSeed:
    master_seed: int
    sample_index: int


def stream(seed: SampleSeed, substream: int = 0) -> Generator:
    """Philox generator for one (sample, substream) pair.

    The substream id selects a disjoint 2^192-draw counter block, so
    substreams of the same sample never overlap.
    """
    key = np.array([seed.master_seed, seed.sample_index], dtype=np.uint64)
    counter = np.array([0, 0, 0, substream], dtype=np.uint64)
    return Generator(Philox(key=key, counter=counter))


def normals(gen: Generator, shape) -> np.ndarray:
    """Standard normals via the inverse CDF of uniforms strictly inside (0,1)."""
    u = (gen.integers(0, 1 << 53, size=shape, dtype=np.uint64) + 0.5) * 2.0 ** -53
    return ndtri(u)


def _mode_coefficients(gen: Generator, spec: EnsembleSpec, n_interfaces: int):
    """Draw (a, b) mode coefficients, a normalized so each row sums to 1."""
    K = spec.modes
    a = np.empty((n_interfaces, K))
    b = np.empty((n_interfaces, K))
    for i in range(n_interfaces):
        if spec.distribution == "uniform01":
            a[i] = gen.random(K)
            b[i] = gen.random(K)
        else:
            a[i] = normals(gen, K)
            b[i] = normals(gen, K)
        a[i] /= a[i].sum()
    return a, b


def kh_interface_coeffs(seed: SampleSeed, spec: EnsembleSpec):
    """Mode coefficients (a, b), shape (2, K), for the two KH interfaces."""
    return _mode_coefficients(stream(seed), spec, 2)


def rm_interface_coeffs(seed: SampleSeed, spec: EnsembleSpec):
    """Mode coefficients (a, b), shape (1, K), for the RM density interface."""
    return _mode_coefficients(stream(seed), spec, 1)


def _interface(x: np.ndarray, base: float, eps: float, a: np.ndarray, b: np.ndarray):
    """base + eps * sum_j a_j sin(2 pi (x + b_j)) evaluated on x."""
    phases = np.sin(2.0 * np.pi * (x[:, None] + b[None, :]))
    return base + eps * phases @ a


def sample_kh(seed: SampleSeed, spec: EnsembleSpec, grid: Grid, gas: GasParams) -> ConservedField:
    """Perturbed shear layer: inner state between the two interfaces."""
    if spec.family != "kelvin_helmholtz":
        raise ConfigError(f"spec family is {spec.family!r}")
    a, b = kh_interface_coeffs(seed, spec)
    x = grid.cell_centers()
    i1 = _interface(x, 0.25, spec.epsilon, a[0], b[0])
    i2 = _interface(x, 0.75, spec.epsilon, a[1], b[1])
    x2 = x[None, :]
    inner = (i1[:, None] <= x2) & (x2 <= i2[:, None])
    q = np.empty((4, grid.n, grid.n))
    for c in range(4):
        q[c] = np.where(inner, KH_INNER[c], KH_OUTER[c])
    return ConservedField(grid, euler.to_conserved(q, gas))


def sample_rm(seed: SampleSeed, spec: EnsembleSpec, grid: Grid, gas: GasParams) -> ConservedField:
    """Pressure disc inside a perturbed circular density interface, at rest."""
    if spec.family != "richtmeyer_meshkov":
        raise ConfigError(f"spec family is {spec.family!r}")
    a, b = rm_interface_coeffs(seed, spec)
    x = grid.cell_centers()
    radius = np.hypot(x[:, None] - RM_CENTER[0], x[None, :] - RM_CENTER[1])
    iface = _interface(x, RM_RHO_RADIUS, spec.epsilon, a[0], b[0])
    q = np.empty((4, grid.n, grid.n))
    q[0] = np.where(radius < iface[:, None], 2.0, 1.0)
    q[1] = 0.0
    q[2] = 0.0
    q[3] = np.where(radius < RM_P_RADIUS, 20.0, 1.0)
    return ConservedField(grid, euler.to_conserved(q, gas))


def fbm_level_scale(hurst: float, level: int) -> float:
    """Displacement standard deviation sqrt((1 - 2^(2H-2)) / 2^(2lH))."""
    return np.sqrt((1.0 - 2.0 ** (2.0 * hurst - 2.0)) / 2.0 ** (2.0 * level * hurst))


def fbm_surface(gen: Generator, k: int, hurst: float) -> np.ndarray:
    """Midpoint-displacement surface on (2^k + 1)^2 nodes, corners fixed to 0.

    Level l bisects squares of side 2^(k-l): square centers get the average
    of their 4 corners, edge midpoints the average of their 2 endpoints,
    each plus a fresh Gaussian scaled by fbm_level_scale(H, l).
    """
    n = 1 << k
    g = np.zeros((n + 1, n + 1))
    for level in range(k):
        h = n >> level
        half = h >> 1
        scale = fbm_level_scale(hurst, level)
        m = 1 << level
        tl = g[0:n:h, 0:n:h]
        tr = g[0:n:h, h::h]
        bl = g[h::h, 0:n:h]
        br = g[h::h, h::h]
        g[half::h, half::h] = 0.25 * (tl + tr + bl + br) + scale * normals(gen, (m, m))
        g[half::h, 0::h] = 0.5 * (g[0:n:h, 0::h] + g[h::h, 0::h]) + scale * normals(gen, (m, m + 1))
        g[0::h, half::h] = 0.5 * (g[0::h, 0:n:h] + g[0::h, h::h]) + scale * normals(gen, (m + 1, m))
    return g


def sample_fbm(seed: SampleSeed, spec: EnsembleSpec, grid: Grid, gas: GasParams) -> ConservedField:
    """Two independent fBm velocity surfaces on constant (rho, p) background."""
    if spec.family != "fractional_brownian":
        raise ConfigError(f"spec family is {spec.family!r}")
    n = grid.n
    k = n.bit_length() - 1
    if 1 << k != n:
        raise ConfigError(f"fractional Brownian data needs n = 2^k, got n={n}")
    wx = fbm_surface(stream(seed, substream=0), k, spec.hurst)[:n, :n]
    wy = fbm_surface(stream(seed, substream=1), k, spec.hurst)[:n, :n]
    q = np.empty((4, n, n))
    q[0] = FBM_RHO
    q[1] = wx
    q[2] = wy
    q[3] = FBM_P
    return ConservedField(grid, euler.to_conserved(q, gas))


_SAMPLERS = {
    "kelvin_helmholtz": sample_kh,
    "richtmeyer_meshkov": sample_rm,
    "fractional_brownian": sample_fbm,
}


def sample_field(seed: SampleSeed, spec: EnsembleSpec, grid: Grid, gas: GasParams) -> ConservedField:
    """Draw the initial field for one sample of the ensemble."""
    return _SAMPLERS[spec.family](seed, spec, grid, gas)


def draw_ensemble(spec: EnsembleSpec, grid: Grid, m: int, gas: GasParams):
    """M i.i.d. initial fields, deterministically derived from the master seed."""
    if m < 1:
        raise ConfigError(f"sample count must be >= 1, got {m}")
    return [sample_field(SampleSeed(spec.master_seed, i), spec, grid, gas) for i in range(m)]
