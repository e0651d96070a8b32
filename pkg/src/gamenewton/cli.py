"""Command-line entry point: one subcommand per experiment kind."""

import argparse
import sys

from .errors import ConfigError, GameSolverError
from .report import parse_config, run_experiment

_SUBCOMMANDS = {
    "converge": "Convergence",
    "iss": "IssCampaign",
    "distributed": "DistributedCompare",
    "quasireg": "QuasiRegularityScan",
    "mpc-sweep": "McpcSweep",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gamenewton",
        description="Nash equilibrium solver experiments and campaigns",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--seed-override",
            type=int,
            default=None,
            help="replace the config seed list with a single seed",
        )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    expected = _SUBCOMMANDS[args.command]
    if cfg.kind != expected:
        print(
            f"config kind {cfg.kind!r} does not match subcommand "
            f"{args.command!r} (expects {expected!r})",
            file=sys.stderr,
        )
        return 2
    try:
        report = run_experiment(cfg, args.out, seed_override=args.seed_override)
    except GameSolverError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1
    for key, val in sorted(report.tables.items()):
        print(f"{key}: {val}")
    print(f"passed: {report.passed}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
