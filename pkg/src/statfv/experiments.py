"""Experiment orchestration: refinement and stability studies with CSV output.

A refinement study runs the ensemble at each level, emits per-level
statistics tables (moment fields, structure-function curves and their
exponent evolution, entropy series, BV norms, histograms), then cross-level
Cauchy and Wasserstein rates between consecutive resolutions. Stability
studies compare ensembles that differ in perturbation amplitude,
perturbation distribution, or reconstruction at fixed or varied resolution.

Every table embeds the config hash of the runs it came from; re-running an
identical plan reproduces byte-identical CSVs.
"""

import json
import os
import traceback
from dataclasses import dataclass, replace

import numpy as np

from . import stats as st
from .config import ExperimentPlan, serialize
from .driver import config_hash, load_measure, run_ensemble
from .errors import StatFVError
from .sfv_io import write_csv


@dataclass
class ExperimentResult:
    exit_code: int
    output_dir: str
    failures: list


def _level_dir(out, n):
    return os.path.join(out, f"level_{n:04d}")


def _variant_dir(out, label):
    return os.path.join(out, f"run_{label}")


class _Recorder:
    """Collects (context, error) pairs; statistics failures never abort the
    experiment, they only flip the exit code."""

    def __init__(self):
        self.failures = []

    def run(self, context, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (StatFVError, ValueError) as exc:
            self.failures.append({"context": context, "error": f"{type(exc).__name__}: {exc}"})
            return None
        except Exception as exc:  # keep partial results on unexpected errors too
            self.failures.append({"context": context,
                                  "error": f"{type(exc).__name__}: {exc}",
                                  "traceback": traceback.format_exc()})
            return None


def _emit_moments(plan, mu, n, ti, stats_dir, chash):
    mom = st.mean_variance(mu, ti)
    nn = mu.grid.n
    xs = mu.grid.cell_centers()
    rows = []
    for i in range(nn):
        for j in range(nn):
            rows.append((i, j, float(xs[i]), float(xs[j]),
                         *(float(mom.mean[c, i, j]) for c in range(4)),
                         *(float(mom.variance[c, i, j]) for c in range(4))))
    cols = ["i", "j", "x", "y", "mean_rho", "mean_mx", "mean_my", "mean_E",
            "var_rho", "var_mx", "var_my", "var_E"]
    write_csv(os.path.join(stats_dir, f"moments_n{n:04d}_t{ti}.csv"), cols, rows, chash)


def _emit_structure(plan, mu, n, stats_dir, chash, rec):
    radii = plan.radii
    for p in plan.structure_p:
        theta_rows = []
        for ti, t in enumerate(mu.times):
            curve = rec.run(f"structure n={n} p={p} t={t}",
                            st.structure_function, mu, ti, p, radii)
            if curve is None:
                continue
            rows = [(float(r), float(o), float(v))
                    for r, o, v in zip(curve.radii, curve.omega, curve.values)]
            write_csv(os.path.join(stats_dir, f"structure_n{n:04d}_p{p:g}_t{ti}.csv"),
                      ["r", "omega", "value"], rows, chash)
            scaling = None
            if len(curve.radii) >= 3:
                scaling = rec.run(f"scaling n={n} p={p} t={t}",
                                  st.scaling_diagnostic, curve, max(p, 2.0))
            theta_rows.append((float(t), float(curve.theta), float(curve.fit_residual),
                               float(scaling.constant) if scaling else float("nan")))
        if theta_rows:
            write_csv(os.path.join(stats_dir, f"theta_n{n:04d}_p{p:g}.csv"),
                      ["time", "theta", "fit_residual", "scaling_constant"],
                      theta_rows, chash)


def _emit_histograms(plan, mu, n, stats_dir, chash):
    for k, (xpt, ypt) in enumerate(plan.histogram_points):
        x = (mu.grid.cell_index(xpt[0]), mu.grid.cell_index(xpt[1]))
        y = (mu.grid.cell_index(ypt[0]), mu.grid.cell_index(ypt[1]))
        ti = len(mu.times) - 1
        hist = st.histogram_2pt(mu, ti, x, y)
        rows = []
        for a in range(hist.counts.shape[0]):
            for b in range(hist.counts.shape[1]):
                rows.append((float(hist.edges_x[a]), float(hist.edges_y[b]),
                             int(hist.counts[a, b])))
        write_csv(os.path.join(stats_dir, f"histogram_n{n:04d}_t{ti}_pair{k}.csv"),
                  ["edge_x", "edge_y", "count"], rows, chash)


def compute_level_statistics(plan: ExperimentPlan, n: int, mu, stats_dir, rec: _Recorder):
    chash = mu.provenance["config_hash"]
    s = plan.statistics
    if "mean" in s or "variance" in s:
        for ti in range(len(mu.times)):
            rec.run(f"moments n={n} t={mu.times[ti]}",
                    _emit_moments, plan, mu, n, ti, stats_dir, chash)
    if "structure" in s:
        _emit_structure(plan, mu, n, stats_dir, chash, rec)
    if "entropy" in s and len(mu.times) >= 2:
        series = rec.run(f"entropy n={n}", st.entropy_diagnostic, mu)
        if series is not None:
            rows = [(float(t), float(v)) for t, v in zip(series.times, series.values)]
            write_csv(os.path.join(stats_dir, f"entropy_n{n:04d}.csv"),
                      ["time", "total_entropy"], rows, chash)
    if "histogram" in s and plan.histogram_points:
        rec.run(f"histograms n={n}", _emit_histograms, plan, mu, n, stats_dir, chash)


def _bv_rows(plan, measures, rec):
    rows = []
    for n, mu in measures.items():
        for ti, t in enumerate(mu.times):
            def avg_bv(mu=mu, ti=ti):
                from .driver import estimate_observable
                return estimate_observable(mu, ti, lambda f: st.bv_norm(f, "rho", mu.gas))
            val = rec.run(f"bv n={n} t={t}", avg_bv)
            if val is not None:
                rows.append((n, float(t), float(val)))
    return rows


def compute_comparisons(plan: ExperimentPlan, measures: dict, stats_dir, rec: _Recorder):
    """Cross-level Cauchy and Wasserstein tables for a refinement study."""
    levels = sorted(measures)
    pairs = [(a, b) for a, b in zip(levels, levels[1:]) if b == 2 * a]
    chash = "+".join(measures[n].provenance["config_hash"][:16] for n in levels)
    cauchy_rows = []
    functionals = [f for f in ("sample", "mean", "variance", "structure")
                   if f in plan.statistics]
    for nc, nf in pairs:
        for ti, t in enumerate(measures[nc].times):
            for fn in functionals:
                val = rec.run(f"cauchy {fn} {nc}->{nf} t={t}", st.cauchy_rate,
                              measures[nc], measures[nf], ti, fn)
                if val is not None:
                    cauchy_rows.append((nc, nf, float(t), fn, "rho", float(val)))
    if cauchy_rows:
        write_csv(os.path.join(stats_dir, "cauchy.csv"),
                  ["n_coarse", "n_fine", "time", "functional", "component", "value"],
                  cauchy_rows, chash)
    if "wasserstein1" in plan.statistics:
        rows = []
        for nc, nf in pairs:
            ti = len(measures[nc].times) - 1
            rep = rec.run(f"wasserstein1 {nc}->{nf}", st.wasserstein_1pt,
                          measures[nc], measures[nf], ti)
            if rep is not None:
                rows.append((nc, nf, float(measures[nc].times[ti]), float(rep.value)))
        if rows:
            write_csv(os.path.join(stats_dir, "wasserstein1.csv"),
                      ["n_coarse", "n_fine", "time", "value"], rows, chash)
    if "wasserstein2" in plan.statistics:
        rows = []
        for nc, nf in pairs:
            ti = len(measures[nc].times) - 1
            rep = rec.run(f"wasserstein2 {nc}->{nf}", st.wasserstein_2pt,
                          measures[nc], measures[nf], ti,
                          points_per_axis=plan.eval_points_per_axis,
                          cap=plan.wasserstein_cap)
            if rep is not None:
                rows.append((nc, nf, float(measures[nc].times[ti]), float(rep.value)))
        if rows:
            write_csv(os.path.join(stats_dir, "wasserstein2.csv"),
                      ["n_coarse", "n_fine", "time", "value"], rows, chash)
    if "bv" in plan.statistics:
        rows = _bv_rows(plan, measures, rec)
        if rows:
            write_csv(os.path.join(stats_dir, "bv.csv"),
                      ["n", "time", "bv_norm"], rows, chash)


def _run_level(plan, n, out_dir, **overrides):
    cfg = plan.level_config(n, output_dir=out_dir, **overrides)
    return run_ensemble(cfg), cfg


def run_experiment(plan: ExperimentPlan, out_override=None, workers=None,
                   seed_override=None) -> ExperimentResult:
    out = out_override or plan.output_dir
    if workers is not None:
        plan = replace(plan, base=replace(plan.base, workers=workers))
    if seed_override is not None:
        plan = replace(plan, base=replace(
            plan.base, ensemble=replace(plan.base.ensemble, master_seed=seed_override)))
    os.makedirs(out, exist_ok=True)
    stats_dir = os.path.join(out, "stats")
    os.makedirs(stats_dir, exist_ok=True)
    with open(os.path.join(out, "plan.ini"), "w") as fh:
        fh.write(serialize(replace(plan, output_dir=out)))
    rec = _Recorder()
    hashes = {}
    if plan.kind == "refinement":
        measures = {}
        for n in plan.levels:
            mu, cfg = _run_level(plan, n, _level_dir(out, n))
            measures[n] = mu
            hashes[f"level_{n}"] = config_hash(cfg)
        for n in plan.levels:
            compute_level_statistics(plan, n, measures[n], stats_dir, rec)
        compute_comparisons(plan, measures, stats_dir, rec)
    elif plan.kind == "stability_distribution":
        n = plan.levels[-1]
        rows = []
        for eps in plan.epsilons:
            pair = {}
            for dist in ("uniform01", "stdnormal"):
                label = f"n{n:04d}_eps{eps:g}_{dist}"
                ens = replace(plan.base.ensemble, epsilon=eps, distribution=dist)
                mu, cfg = _run_level(plan, n, _variant_dir(out, label),
                                     ensemble=ens)
                pair[dist] = mu
                hashes[label] = config_hash(cfg)
            ti = len(plan.base.output_times) - 1
            rep = rec.run(f"wasserstein2 distribution eps={eps}", st.wasserstein_2pt,
                          pair["uniform01"], pair["stdnormal"], ti,
                          points_per_axis=plan.eval_points_per_axis,
                          cap=plan.wasserstein_cap)
            if rep is not None:
                rows.append((float(eps), n, float(rep.value)))
        if rows:
            write_csv(os.path.join(stats_dir, "stability_distribution.csv"),
                      ["epsilon", "n", "w2_value"], rows, "+".join(sorted(hashes)))
    elif plan.kind == "stability_epsilon":
        n = plan.levels[-1]
        rows = []
        for eps in plan.epsilons:
            pair = {}
            for fac, tag in ((1.0, "full"), (0.5, "half")):
                label = f"n{n:04d}_eps{eps * fac:g}"
                ens = replace(plan.base.ensemble, epsilon=eps * fac)
                mu, cfg = _run_level(plan, n, _variant_dir(out, label), ensemble=ens)
                pair[tag] = mu
                hashes[label] = config_hash(cfg)
            ti = len(plan.base.output_times) - 1
            rep = rec.run(f"wasserstein2 epsilon eps={eps}", st.wasserstein_2pt,
                          pair["full"], pair["half"], ti,
                          points_per_axis=plan.eval_points_per_axis,
                          cap=plan.wasserstein_cap)
            if rep is not None:
                rows.append((float(eps), n, float(rep.value)))
        if rows:
            write_csv(os.path.join(stats_dir, "stability_epsilon.csv"),
                      ["epsilon", "n", "w2_value"], rows, "+".join(sorted(hashes)))
    else:  # stability_scheme: MC vs WENO2 reconstruction per level
        rows = []
        for n in plan.levels:
            pair = {}
            for recon in ("mc", "weno2"):
                label = f"n{n:04d}_{recon}"
                scheme = replace(plan.base.scheme, reconstruction=recon)
                mu, cfg = _run_level(plan, n, _variant_dir(out, label), scheme=scheme)
                pair[recon] = mu
                hashes[label] = config_hash(cfg)
            ti = len(plan.base.output_times) - 1
            rep = rec.run(f"wasserstein2 scheme n={n}", st.wasserstein_2pt,
                          pair["weno2"], pair["mc"], ti,
                          points_per_axis=plan.eval_points_per_axis,
                          cap=plan.wasserstein_cap)
            if rep is not None:
                rows.append((n, float(rep.value)))
        if rows:
            write_csv(os.path.join(stats_dir, "stability_scheme.csv"),
                      ["n", "w2_value"], rows, "+".join(sorted(hashes)))
    summary = {
        "kind": plan.kind,
        "levels": list(plan.levels),
        "config_hashes": hashes,
        "statistics": list(plan.statistics),
        "failures": rec.failures,
    }
    from . import __version__
    summary["version"] = __version__
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if rec.failures:
        with open(os.path.join(out, "failures.json"), "w") as fh:
            json.dump(rec.failures, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return ExperimentResult(1 if rec.failures else 0, out, rec.failures)


def recompute_statistics(plan: ExperimentPlan, out: str) -> ExperimentResult:
    """Recompute per-level statistics from existing run directories."""
    rec = _Recorder()
    stats_dir = os.path.join(out, "stats")
    os.makedirs(stats_dir, exist_ok=True)
    for n in plan.levels:
        mu = rec.run(f"load level {n}", load_measure, _level_dir(out, n))
        if mu is not None:
            compute_level_statistics(plan, n, mu, stats_dir, rec)
    return ExperimentResult(1 if rec.failures else 0, out, rec.failures)


def recompute_comparisons(plan: ExperimentPlan, out: str) -> ExperimentResult:
    """Recompute cross-level tables from existing run directories."""
    rec = _Recorder()
    stats_dir = os.path.join(out, "stats")
    os.makedirs(stats_dir, exist_ok=True)
    measures = {}
    for n in plan.levels:
        mu = rec.run(f"load level {n}", load_measure, _level_dir(out, n))
        if mu is not None:
            measures[n] = mu
    if measures:
        compute_comparisons(plan, measures, stats_dir, rec)
    return ExperimentResult(1 if rec.failures else 0, out, rec.failures)


def verify_experiment(plan: ExperimentPlan, out: str) -> ExperimentResult:
    """Check that manifests and field dumps are present, readable, and
    consistent with the plan's config hashes."""
    from . import sfv_io
    rec = _Recorder()
    if plan.kind != "refinement":
        rec.failures.append({"context": "verify", "error": "only refinement plans are verified"})
        return ExperimentResult(1, out, rec.failures)
    for n in plan.levels:
        ldir = _level_dir(out, n)
        mu = rec.run(f"load level {n}", load_measure, ldir)
        if mu is None:
            continue
        expected = config_hash(plan.level_config(n, output_dir=ldir))
        if mu.provenance["config_hash"] != expected:
            rec.failures.append({
                "context": f"level {n}",
                "error": "manifest config hash does not match the plan",
            })
        for r in mu.records:
            if r.status != "ok" or not r.paths:
                continue
            for ti, rel in r.paths.items():
                def check(path=os.path.join(ldir, rel)):
                    sfv_io.load_field(path)
                rec.run(f"level {n} sample {r.index} t{ti}", check)
    return ExperimentResult(1 if rec.failures else 0, out, rec.failures)
