import json
import os

import numpy as np
import pytest

from statfv import GasParams, Grid, SchemeConfig
from statfv import driver, ensembles, solver
from statfv.driver import (EmpiricalMeasure, RunConfig, config_hash,
                           estimate_observable, load_measure, run_ensemble)
from statfv.ensembles import EnsembleSpec, SampleSeed
from statfv.errors import ConfigError, EmptyEnsemble, NonFinite

GAS = GasParams()


def kh_config(**kw):
    base = dict(
        grid_n=32,
        ensemble=EnsembleSpec(family="kelvin_helmholtz", epsilon=0.05, master_seed=3),
        scheme=SchemeConfig(flux="hll3", reconstruction="mc"),
        samples=4,
        output_times=(0.0,),
    )
    base.update(kw)
    return RunConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        kh_config(output_times=())
    with pytest.raises(ConfigError):
        kh_config(output_times=(0.5, 0.1))
    with pytest.raises(ConfigError):
        kh_config(output_times=(0.5,), end_time=0.2)
    with pytest.raises(ConfigError):
        kh_config(samples=0)
    with pytest.raises(ConfigError):
        kh_config(workers=0)


def test_samples_default_to_resolution():
    cfg = kh_config(samples=None)
    assert cfg.m == cfg.grid_n


def test_config_hash_ignores_execution_knobs(tmp_path):
    a = kh_config()
    b = kh_config(workers=4, output_dir=str(tmp_path), cache_fields=7)
    c = kh_config(samples=5)
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)


def test_single_sample_at_t0_is_the_projected_datum():
    cfg = kh_config(samples=1)
    mu = run_ensemble(cfg)
    expected = ensembles.sample_field(SampleSeed(3, 0), cfg.ensemble, Grid(32), GAS)
    got = mu.field(0, 0)
    assert np.array_equal(got.data, expected.data)


def test_unperturbed_ensemble_is_degenerate():
    cfg = kh_config(ensemble=EnsembleSpec(family="kelvin_helmholtz", epsilon=0.0,
                                          master_seed=3),
                    samples=5, output_times=(0.0, 0.1))
    mu = run_ensemble(cfg)
    for ti in range(2):
        ref = mu.field(ti, 0).data
        for m in range(1, 5):
            assert np.array_equal(mu.field(ti, m).data, ref)


def test_snapshots_match_single_sample_pipeline_bitwise():
    cfg = kh_config(samples=3, output_times=(0.05, 0.1))
    mu = run_ensemble(cfg)
    for m in range(3):
        u0 = ensembles.sample_field(SampleSeed(3, m), cfg.ensemble, Grid(32), GAS)
        res = solver.evolve(u0, cfg.output_times, cfg.scheme, GAS)
        for ti in range(2):
            assert np.array_equal(mu.field(ti, m).data, res.snapshots[ti].data)
        # the first output time also agrees with a direct single-target advance
        direct = solver.advance(u0, cfg.output_times[0], cfg.scheme, GAS)
        assert np.array_equal(mu.field(0, m).data, direct.data)


def test_worker_pool_matches_serial(tmp_path):
    cfg1 = kh_config(samples=4, output_times=(0.05,))
    cfg2 = kh_config(samples=4, output_times=(0.05,), workers=2)
    a = run_ensemble(cfg1)
    b = run_ensemble(cfg2)
    for m in range(4):
        assert np.array_equal(a.field(0, m).data, b.field(0, m).data)


def test_manifest_round_trip_and_hash(tmp_path):
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    cfg1 = kh_config(output_dir=str(out1), output_times=(0.0, 0.05))
    cfg2 = kh_config(output_dir=str(out2), output_times=(0.0, 0.05))
    mu1 = run_ensemble(cfg1)
    run_ensemble(cfg2)
    m1 = (out1 / "manifest.json").read_bytes()
    m2 = (out2 / "manifest.json").read_bytes()
    assert m1 == m2  # byte-identical manifests for identical configs
    loaded = load_measure(str(out1))
    for ti in range(2):
        for m in range(4):
            assert np.array_equal(loaded.field(ti, m).data, mu1.field(ti, m).data)


def test_field_cache_is_bounded(tmp_path):
    cfg = kh_config(output_dir=str(tmp_path / "r"), cache_fields=2)
    run_ensemble(cfg)
    mu = load_measure(str(tmp_path / "r"), cache_fields=2)
    for m in range(4):
        mu.field(0, m)
    assert len(mu._cache) <= 2


def test_estimate_observable_total_mass_spread():
    spec = EnsembleSpec(family="kelvin_helmholtz", epsilon=0.02, master_seed=9)
    cfg = kh_config(ensemble=spec, grid_n=64, samples=16)
    mu = run_ensemble(cfg)
    masses = [f.data[0].sum() * Grid(64).delta ** 2 for _, f in mu.iter_fields(0)]
    est = estimate_observable(mu, 0, lambda f: f.data[0].sum() * Grid(64).delta ** 2)
    assert np.isclose(est, np.mean(masses), rtol=1e-13)
    # interface displacement <= eps bounds the per-sample mass spread
    assert np.max(masses) - np.min(masses) < 4 * spec.epsilon


def test_estimate_observable_linear_and_degenerate():
    cfg = kh_config(ensemble=EnsembleSpec(family="kelvin_helmholtz", epsilon=0.0,
                                          master_seed=3), samples=6)
    mu = run_ensemble(cfg)
    v1 = estimate_observable(mu, 0, lambda f: float(f.data[3].mean()))
    single = float(mu.field(0, 0).data[3].mean())
    assert v1 == single
    # linearity in the observable
    v2 = estimate_observable(mu, 0, lambda f: 2.0 * float(f.data[3].mean()) + 1.0)
    assert np.isclose(v2, 2.0 * v1 + 1.0, rtol=1e-15)


def test_estimator_is_storage_order_invariant():
    cfg = kh_config(samples=5, output_times=(0.0,))
    mu = run_ensemble(cfg)
    shuffled = EmpiricalMeasure(mu.grid, mu.gas, mu.times, list(reversed(mu.records)),
                                mu.provenance, store=mu._store)
    obs = lambda f: float(f.data[0].sum())
    assert estimate_observable(mu, 0, obs) == estimate_observable(shuffled, 0, obs)


def test_failed_samples_excluded_with_warning(monkeypatch):
    real = driver._evolve_sample

    def flaky(cfg, index):
        if index == 1:
            raise NonFinite("synthetic blow-up", step=17)
        return real(cfg, index)

    monkeypatch.setattr(driver, "_evolve_sample", flaky)
    cfg = kh_config(samples=3)
    with pytest.warns(UserWarning, match="1 of 3 samples failed"):
        mu = run_ensemble(cfg)
    assert mu.n_completed == 2
    assert [r.status for r in mu.records] == ["ok", "failed", "ok"]
    assert mu.records[1].error == "NonFinite"
    # statistics skip the failed sample
    est = estimate_observable(mu, 0, lambda f: 1.0)
    assert est == 1.0


def test_empty_ensemble_raises(monkeypatch):
    def always_fail(cfg, index):
        raise NonFinite("synthetic", step=0)

    monkeypatch.setattr(driver, "_evolve_sample", always_fail)
    with pytest.warns(UserWarning):
        mu = run_ensemble(kh_config(samples=2))
    with pytest.raises(EmptyEnsemble):
        estimate_observable(mu, 0, lambda f: 1.0)


def test_mc_error_bound_at_t0():
    # empirical MSE across repeated ensembles <= 2 * Var/M for a bounded
    # observable (the Monte Carlo mean-square error bound, with slack for
    # the sampling noise of the check itself)
    spec = EnsembleSpec(family="kelvin_helmholtz", epsilon=0.05, master_seed=0)
    grid_n, m_samples, runs = 32, 8, 24
    obs = lambda f: float((f.data[0] ** 2).mean())
    estimates = []
    all_values = []
    for r in range(runs):
        cfg = kh_config(grid_n=grid_n, samples=m_samples,
                        ensemble=EnsembleSpec(family="kelvin_helmholtz",
                                              epsilon=0.05, master_seed=100 + r))
        mu = run_ensemble(cfg)
        vals = [obs(f) for _, f in mu.iter_fields(0)]
        all_values.extend(vals)
        estimates.append(np.mean(vals))
    reference = np.mean(all_values)
    mse = np.mean((np.array(estimates) - reference) ** 2)
    bound = 2.0 * np.var(all_values) / m_samples
    assert mse <= bound


def test_manifest_lists_required_fields(tmp_path):
    out = tmp_path / "run"
    cfg = kh_config(output_dir=str(out))
    run_ensemble(cfg)
    man = json.loads((out / "manifest.json").read_text())
    assert man["config_hash"] == config_hash(cfg)
    sample = man["samples"][0]
    for key in ("index", "seed", "status", "dumps"):
        assert key in sample
    rel = sample["dumps"]["0"]
    assert os.path.exists(out / rel)
    assert os.path.exists(str(out / rel) + ".meta")
