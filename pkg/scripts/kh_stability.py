#!/usr/bin/env python3
"""Stability studies for the Kelvin-Helmholtz statistical solution.

Three studies of the two-point correlation marginal, each one CSV row per
variation:
  amplitude     W1(nu2 at eps, nu2 at eps/2) per perturbation amplitude
  distribution  W1(nu2 uniform, nu2 normal) per amplitude
  scheme        W1(nu2 WENO2, nu2 MC) per resolution

Usage: python scripts/kh_stability.py amplitude|distribution|scheme [OUTDIR]
"""

import argparse
import sys
from pathlib import Path

from statfv.cli import main as cli_main

PLAN = """\
[experiment]
kind = {kind}
levels = {levels}
samples = {samples}
statistics = structure
structure_p = 2
eval_points_per_axis = {ppa}
{epsilons}

[run]
end_time = 2.0
output_times = 2.0
flux = hllc
reconstruction = weno2
workers = {workers}

[ensemble]
family = kelvin_helmholtz
epsilon = 0.05
master_seed = 2024

[output]
directory = {out}
"""

KINDS = {
    "amplitude": "stability_epsilon",
    "distribution": "stability_distribution",
    "scheme": "stability_scheme",
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("study", choices=sorted(KINDS))
    ap.add_argument("outdir", nargs="?", default=None)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--eval-points", type=int, default=4)
    ap.add_argument("--epsilons", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    args = ap.parse_args()
    out = Path(args.outdir or f"out/kh_stability_{args.study}")
    out.mkdir(parents=True, exist_ok=True)
    kind = KINDS[args.study]
    if kind == "stability_scheme":
        levels = " ".join(str(args.n * 2 ** k) for k in range(2))
        eps_line = ""
    else:
        levels = str(args.n)
        eps_line = "epsilons = " + " ".join(map(str, args.epsilons))
    plan_path = out / "plan.ini"
    plan_path.write_text(PLAN.format(kind=kind, levels=levels, samples=args.samples,
                                     out=out, workers=args.workers,
                                     ppa=args.eval_points, epsilons=eps_line))
    return cli_main(["run", "--config", str(plan_path)])


if __name__ == "__main__":
    sys.exit(main())
