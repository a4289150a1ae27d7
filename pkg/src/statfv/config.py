"""Experiment plans and their on-disk INI representation.

A plan is one structured text file (key = value, sectioned). Unknown
sections or keys are errors: the config file is the complete record of a
run, so silent typo tolerance is unacceptable. serialize() emits canonical
text; parse(serialize(parse(f))) == parse(f).
"""

import configparser
import io
from dataclasses import dataclass, field as dc_field, replace

from .driver import RunConfig
from .ensembles import EnsembleSpec
from .errors import ConfigError
from .euler import GasParams
from .solver import SchemeConfig

KINDS = ("refinement", "stability_distribution", "stability_scheme", "stability_epsilon")
STATISTICS = ("mean", "variance", "sample", "structure", "entropy", "bv",
              "wasserstein1", "wasserstein2", "histogram")

_SECTIONS = {
    "experiment": {"kind", "levels", "samples", "statistics", "structure_p", "radii",
                   "eval_points_per_axis", "epsilons", "histogram_points", "wasserstein_cap"},
    "run": {"end_time", "output_times", "cfl", "flux", "reconstruction", "workers"},
    "ensemble": {"family", "epsilon", "modes", "hurst", "distribution", "master_seed"},
    "gas": {"gamma"},
    "output": {"directory"},
}
_REQUIRED = {
    "experiment": {"levels"},
    "run": {"output_times", "flux", "reconstruction"},
    "ensemble": {"family"},
    "output": {"directory"},
}


@dataclass(frozen=True)
class ExperimentPlan:
    kind: str
    levels: tuple
    samples: int | None               # None: M matches the resolution
    statistics: tuple
    structure_p: tuple
    radii: tuple | None               # None: solver default per level
    eval_points_per_axis: int
    epsilons: tuple
    histogram_points: tuple           # ((x, y) cell-coordinate pairs)
    wasserstein_cap: int
    base: RunConfig                   # grid_n is a placeholder (levels[0])
    output_dir: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for s in self.statistics:
            if s not in STATISTICS:
                raise ConfigError(f"unknown statistic {s!r}")
        lv = self.levels
        if not lv or any(b <= a for a, b in zip(lv, lv[1:])):
            raise ConfigError("levels must be strictly increasing")
        if any(n & (n - 1) for n in lv):
            raise ConfigError("levels must be powers of two")
        if self.kind in ("stability_distribution", "stability_epsilon") and not self.epsilons:
            raise ConfigError(f"{self.kind} needs an epsilons list")

    def level_config(self, n: int, **overrides) -> RunConfig:
        kw = dict(grid_n=n, samples=self.samples)
        kw.update(overrides)
        return replace(self.base, **kw)


def _get(parser, section, key, default=None):
    if parser.has_option(section, key):
        return parser.get(section, key)
    return default


def _floats(text):
    return tuple(float(tok) for tok in text.split())


def _ints(text):
    return tuple(int(tok) for tok in text.split())


def parse_config(path) -> ExperimentPlan:
    """Parse and fully validate a plan file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    return _plan_from_parser(parser)


def parse_config_text(text: str) -> ExperimentPlan:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string(text)
    return _plan_from_parser(parser)


def _plan_from_parser(parser) -> ExperimentPlan:
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if not parser.has_option(section, key):
                raise ConfigError(f"missing required key {key!r} in section [{section}]")
    try:
        scheme = SchemeConfig(
            flux=parser.get("run", "flux"),
            reconstruction=parser.get("run", "reconstruction"),
            cfl=float(_get(parser, "run", "cfl", "0.45")),
        )
        ens_kwargs = dict(family=parser.get("ensemble", "family"))
        for key, conv in (("epsilon", float), ("modes", int), ("hurst", float),
                          ("master_seed", int)):
            val = _get(parser, "ensemble", key)
            if val is not None:
                ens_kwargs[key] = conv(val)
        dist = _get(parser, "ensemble", "distribution")
        if dist is not None:
            ens_kwargs["distribution"] = dist
        ensemble = EnsembleSpec(**ens_kwargs)
        gas = GasParams(gamma=float(_get(parser, "gas", "gamma", "1.4")))
        times = _floats(parser.get("run", "output_times"))
        end_time = _get(parser, "run", "end_time")
        levels = _ints(parser.get("experiment", "levels"))
        samples_raw = _get(parser, "experiment", "samples", "match_n")
        samples = None if samples_raw == "match_n" else int(samples_raw)
        stats = tuple(_get(parser, "experiment", "statistics",
                           "mean variance structure entropy").split())
        radii_raw = _get(parser, "experiment", "radii", "default")
        radii = None if radii_raw == "default" else _floats(radii_raw)
        hist_raw = _get(parser, "experiment", "histogram_points", "")
        hist_points = []
        for chunk in filter(None, (c.strip() for c in hist_raw.split(","))):
            vals = _floats(chunk)
            if len(vals) != 4:
                raise ConfigError("each histogram point pair needs 4 coordinates")
            hist_points.append(((vals[0], vals[1]), (vals[2], vals[3])))
        base = RunConfig(
            grid_n=levels[0],
            ensemble=ensemble,
            scheme=scheme,
            samples=samples,
            output_times=times,
            end_time=float(end_time) if end_time is not None else None,
            gas=gas,
            workers=int(_get(parser, "run", "workers", "1")),
        )
        plan = ExperimentPlan(
            kind=_get(parser, "experiment", "kind", "refinement"),
            levels=levels,
            samples=samples,
            statistics=stats,
            structure_p=_floats(_get(parser, "experiment", "structure_p", "2")),
            radii=radii,
            eval_points_per_axis=int(_get(parser, "experiment", "eval_points_per_axis", "10")),
            epsilons=_floats(_get(parser, "experiment", "epsilons", "")),
            histogram_points=tuple(hist_points),
            wasserstein_cap=int(_get(parser, "experiment", "wasserstein_cap", "1024")),
            base=base,
            output_dir=parser.get("output", "directory"),
        )
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from exc
    return plan


def serialize(plan: ExperimentPlan) -> str:
    """Canonical INI text for a plan; parse(serialize(p)) == p."""
    parser = configparser.ConfigParser()
    fmt = lambda xs: " ".join(repr(float(x)) for x in xs)
    parser["experiment"] = {
        "kind": plan.kind,
        "levels": " ".join(str(n) for n in plan.levels),
        "samples": "match_n" if plan.samples is None else str(plan.samples),
        "statistics": " ".join(plan.statistics),
        "structure_p": fmt(plan.structure_p),
        "eval_points_per_axis": str(plan.eval_points_per_axis),
        "wasserstein_cap": str(plan.wasserstein_cap),
    }
    if plan.radii is not None:
        parser["experiment"]["radii"] = fmt(plan.radii)
    if plan.epsilons:
        parser["experiment"]["epsilons"] = fmt(plan.epsilons)
    if plan.histogram_points:
        parser["experiment"]["histogram_points"] = " , ".join(
            fmt((x[0], x[1], y[0], y[1])) for x, y in plan.histogram_points)
    base = plan.base
    parser["run"] = {
        "end_time": repr(base.end_time),
        "output_times": fmt(base.output_times),
        "cfl": repr(base.scheme.cfl),
        "flux": base.scheme.flux,
        "reconstruction": base.scheme.reconstruction,
        "workers": str(base.workers),
    }
    parser["ensemble"] = {
        "family": base.ensemble.family,
        "epsilon": repr(base.ensemble.epsilon),
        "modes": str(base.ensemble.modes),
        "hurst": repr(base.ensemble.hurst),
        "distribution": base.ensemble.distribution,
        "master_seed": str(base.ensemble.master_seed),
    }
    parser["gas"] = {"gamma": repr(base.gas.gamma)}
    parser["output"] = {"directory": plan.output_dir}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
