"""Monte Carlo ensemble driver: evolve M i.i.d. initial samples and assemble
the empirical measure at the requested output times.

Samples are independent tasks keyed by sample index; a process pool may
evolve them concurrently, and results are identical for any worker count
because every sample's stream and trajectory depend only on its index.
Snapshots either stay in memory or stream to SFV1 dumps under an output
directory, in which case a JSON manifest records provenance; a bounded
cache keeps recently used fields when reading back.
"""

import hashlib
import json
import os
import warnings
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field, asdict

import numpy as np

from . import ensembles, sfv_io, solver
from .ensembles import EnsembleSpec, SampleSeed
from .errors import ConfigError, EmptyEnsemble, NonFinite, NonPhysicalState, FormatError
from .euler import GasParams
from .grid import ConservedField, Grid
from .solver import SchemeConfig

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "statfv-manifest-v1"


@dataclass(frozen=True)
class RunConfig:
    grid_n: int
    ensemble: EnsembleSpec
    scheme: SchemeConfig = dc_field(default_factory=SchemeConfig)
    samples: int | None = None
    output_times: tuple = (1.0,)
    end_time: float | None = None
    gas: GasParams = dc_field(default_factory=GasParams)
    output_dir: str | None = None
    workers: int = 1
    cache_fields: int = 256

    def __post_init__(self):
        times = tuple(float(t) for t in self.output_times)
        object.__setattr__(self, "output_times", times)
        if not times:
            raise ConfigError("need at least one output time")
        if any(t < 0 for t in times) or list(times) != sorted(times):
            raise ConfigError("output times must be sorted and nonnegative")
        t_end = self.end_time if self.end_time is not None else times[-1]
        object.__setattr__(self, "end_time", float(t_end))
        if times[-1] > self.end_time:
            raise ConfigError("output times must lie within [0, end_time]")
        if self.m < 1:
            raise ConfigError(f"sample count must be >= 1, got {self.m}")
        if self.workers < 1:
            raise ConfigError(f"worker count must be >= 1, got {self.workers}")

    @property
    def m(self) -> int:
        """Number of Monte Carlo samples; defaults to the grid resolution."""
        return self.grid_n if self.samples is None else self.samples


def config_hash(cfg: RunConfig) -> str:
    """Hash of everything that determines the run's numerical content."""
    payload = {
        "grid_n": cfg.grid_n,
        "samples": cfg.m,
        "output_times": [sfv_io.format_float(t) for t in cfg.output_times],
        "end_time": sfv_io.format_float(cfg.end_time),
        "scheme": asdict(cfg.scheme),
        "ensemble": asdict(cfg.ensemble),
        "gamma": cfg.gas.gamma,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass
class SampleRecord:
    index: int
    seed: int
    status: str                     # "ok" | "failed"
    error: str | None = None
    steps: int = 0
    floored_cells: int = 0
    paths: dict | None = None       # time_index -> relative dump path (disk mode)


class EmpiricalMeasure:
    """The Monte Carlo approximation: M evolved fields per output time."""

    def __init__(self, grid: Grid, gas: GasParams, times, records, provenance,
                 store=None, run_dir=None, cache_fields=256):
        self.grid = grid
        self.gas = gas
        self.times = tuple(times)
        self.records = sorted(records, key=lambda r: r.index)
        self.provenance = provenance
        self._store = store if store is not None else {}
        self._run_dir = run_dir
        self._cache = OrderedDict()
        self._cache_fields = max(1, cache_fields)

    @property
    def completed(self):
        return [r for r in self.records if r.status == "ok"]

    @property
    def n_completed(self) -> int:
        return len(self.completed)

    def field(self, time_index: int, sample_index: int) -> ConservedField:
        key = (time_index, sample_index)
        if key in self._store:
            return ConservedField(self.grid, self._store[key])
        if key in self._cache:
            self._cache.move_to_end(key)
            return ConservedField(self.grid, self._cache[key])
        rec = next((r for r in self.records if r.index == sample_index), None)
        if rec is None or rec.status != "ok" or rec.paths is None:
            raise EmptyEnsemble(f"no field for sample {sample_index} at time index {time_index}")
        f, _, _ = sfv_io.load_field(os.path.join(self._run_dir, rec.paths[time_index]))
        self._cache[key] = f.data
        while len(self._cache) > self._cache_fields:
            self._cache.popitem(last=False)
        return f

    def iter_fields(self, time_index: int):
        """(sample_index, field) for completed samples, in index order."""
        for rec in self.completed:
            yield rec.index, self.field(time_index, rec.index)

    def time_index(self, time: float) -> int:
        for k, t in enumerate(self.times):
            if abs(t - time) <= 1e-12 * max(1.0, abs(time)):
                return k
        raise ConfigError(f"time {time} is not an output time of this run")


def estimate_observable(mu: EmpiricalMeasure, time_index: int, obs):
    """Monte Carlo estimator (1/M) sum_m obs(u_m), accumulated in sample-index
    order."""
    acc = None
    count = 0
    for _, f in mu.iter_fields(time_index):
        v = obs(f)
        acc = v if acc is None else acc + v
        count += 1
    if count == 0:
        raise EmptyEnsemble("all samples failed")
    return acc / count


def _evolve_sample(cfg: RunConfig, index: int):
    seed = SampleSeed(cfg.ensemble.master_seed, index)
    u0 = ensembles.sample_field(seed, cfg.ensemble, Grid(cfg.grid_n), cfg.gas)
    result = solver.evolve(u0, cfg.output_times, cfg.scheme, cfg.gas)
    return result


def _sample_task(cfg: RunConfig, index: int, chash: str):
    """Evolve one sample; returns a record plus snapshots or dump paths."""
    try:
        result = _evolve_sample(cfg, index)
    except (NonFinite, NonPhysicalState) as exc:
        rec = SampleRecord(index=index, seed=cfg.ensemble.master_seed, status="failed",
                           error=type(exc).__name__)
        return rec, None
    rec = SampleRecord(index=index, seed=cfg.ensemble.master_seed, status="ok",
                       steps=result.steps, floored_cells=result.floored_cells)
    if cfg.output_dir is None:
        return rec, [s.data for s in result.snapshots]
    meta = {
        "config_hash": chash,
        "scheme": f"{cfg.scheme.flux}+{cfg.scheme.reconstruction}",
        "master_seed": cfg.ensemble.master_seed,
        "sample_index": index,
    }
    paths = {}
    fields_dir = os.path.join(cfg.output_dir, "fields")
    for ti, snap in enumerate(result.snapshots):
        rel = os.path.join("fields", f"s{index:05d}_t{ti}.sfv")
        sfv_io.dump_field(os.path.join(cfg.output_dir, rel), snap,
                          cfg.output_times[ti], cfg.gas.gamma, meta)
        paths[ti] = rel
    rec.paths = paths
    return rec, None


def run_ensemble(cfg: RunConfig) -> EmpiricalMeasure:
    """Algorithm: draw M i.i.d. initial samples, evolve each through the
    output times, and collect the empirical measure. Failed samples are
    recorded and excluded from statistics, never resampled."""
    chash = config_hash(cfg)
    if cfg.output_dir is not None:
        os.makedirs(os.path.join(cfg.output_dir, "fields"), exist_ok=True)
    results = []
    if cfg.workers == 1:
        for m in range(cfg.m):
            results.append(_sample_task(cfg, m, chash))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futs = [pool.submit(_sample_task, cfg, m, chash) for m in range(cfg.m)]
            results = [f.result() for f in futs]
    records = []
    store = {}
    for rec, snaps in sorted(results, key=lambda pair: pair[0].index):
        records.append(rec)
        if snaps is not None:
            for ti, data in enumerate(snaps):
                store[(ti, rec.index)] = data
    failed = [r for r in records if r.status == "failed"]
    if failed:
        warnings.warn(f"{len(failed)} of {cfg.m} samples failed and are excluded "
                      f"({sorted(set(r.error for r in failed))})")
    provenance = {
        "config_hash": chash,
        "ensemble": asdict(cfg.ensemble),
        "scheme": asdict(cfg.scheme),
        "grid_n": cfg.grid_n,
        "samples": cfg.m,
        "gamma": cfg.gas.gamma,
    }
    mu = EmpiricalMeasure(Grid(cfg.grid_n), cfg.gas, cfg.output_times, records,
                          provenance, store=store or None, run_dir=cfg.output_dir,
                          cache_fields=cfg.cache_fields)
    if cfg.output_dir is not None:
        _write_manifest(cfg, mu, chash)
    return mu


def _write_manifest(cfg: RunConfig, mu: EmpiricalMeasure, chash: str) -> None:
    from . import __version__
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": __version__,
        "config_hash": chash,
        "grid_n": cfg.grid_n,
        "gamma": cfg.gas.gamma,
        "times": [sfv_io.format_float(t) for t in cfg.output_times],
        "scheme": asdict(cfg.scheme),
        "ensemble": asdict(cfg.ensemble),
        "samples": [
            {
                "index": r.index,
                "seed": r.seed,
                "status": r.status,
                "error": r.error,
                "steps": r.steps,
                "floored_cells": r.floored_cells,
                "dumps": {str(k): v for k, v in (r.paths or {}).items()},
            }
            for r in mu.records
        ],
    }
    with open(os.path.join(cfg.output_dir, MANIFEST_NAME), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_measure(run_dir: str, cache_fields: int = 256) -> EmpiricalMeasure:
    """Reopen an empirical measure from a run directory's manifest."""
    path = os.path.join(run_dir, MANIFEST_NAME)
    try:
        with open(path) as fh:
            man = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"no manifest at {path}")
    if man.get("format") != MANIFEST_FORMAT:
        raise FormatError(f"{path}: unknown manifest format {man.get('format')!r}")
    records = [
        SampleRecord(index=s["index"], seed=s["seed"], status=s["status"],
                     error=s.get("error"), steps=s.get("steps", 0),
                     floored_cells=s.get("floored_cells", 0),
                     paths={int(k): v for k, v in s.get("dumps", {}).items()} or None)
        for s in man["samples"]
    ]
    provenance = {
        "config_hash": man["config_hash"],
        "ensemble": man["ensemble"],
        "scheme": man["scheme"],
        "grid_n": man["grid_n"],
        "samples": len(records),
        "gamma": man["gamma"],
    }
    times = [float(t) for t in man["times"]]
    return EmpiricalMeasure(Grid(man["grid_n"]), GasParams(man["gamma"]), times,
                            records, provenance, run_dir=run_dir,
                            cache_fields=cache_fields)
