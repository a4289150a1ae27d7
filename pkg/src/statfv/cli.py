"""Command-line front end.

Subcommands:
  run      execute an experiment plan (ensembles, statistics, comparisons)
  stats    recompute per-level statistics from an existing output directory
  compare  recompute cross-level comparison tables from existing runs
  verify   check manifests and field dumps against the plan

All subcommands take --config; --out overrides the plan's output directory,
--workers the worker count, --seed-override the ensemble master seed. The
exit status is nonzero iff any requested statistic could not be computed.
"""

import argparse
import sys

from .config import parse_config
from .errors import StatFVError
from .experiments import (recompute_comparisons, recompute_statistics,
                          run_experiment, verify_experiment)


def _parser():
    ap = argparse.ArgumentParser(prog="statfv", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "stats", "compare", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment plan (INI)")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--workers", type=int, default=None, help="override worker count")
        p.add_argument("--seed-override", type=int, default=None,
                       help="override the ensemble master seed")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        plan = parse_config(args.config)
        out = args.out or plan.output_dir
        if args.command == "run":
            result = run_experiment(plan, out_override=args.out, workers=args.workers,
                                    seed_override=args.seed_override)
        elif args.command == "stats":
            result = recompute_statistics(plan, out)
        elif args.command == "compare":
            result = recompute_comparisons(plan, out)
        else:
            result = verify_experiment(plan, out)
    except StatFVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for f in result.failures:
        print(f"FAIL {f['context']}: {f['error']}", file=sys.stderr)
    if result.failures:
        print(f"{len(result.failures)} statistic(s) failed; partial results in "
              f"{result.output_dir}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
