"""Command-line interface.

    obliquetd run --config experiment.cfg [--out DIR] [--jobs N] [--plot]
    obliquetd oracle --mdp FILE [--features FILE | --d K --feature-seed S]
    obliquetd oracle --random-mdp N_STATES N_ACTIONS SEED [--d K]
    obliquetd list-domains
    obliquetd --version

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .. import __version__
from ..errors import ConfigError, ObliqueTDError
from .config import DOMAIN_KEYS, DOMAINS, parse_config


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the CLI contract reserves 2 for I/O.
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="obliquetd", description="oblique-projection TD benchmark harness")
    parser.add_argument("--version", action="version", version=f"obliquetd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", required=True, help="experiment config file")
    run.add_argument("--out", default=None, help="override the configured output directory")
    run.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("--plot", action="store_true", help="also render figure files")

    oracle = sub.add_parser("oracle", help="exact-projection report for a tabular MDP")
    src = oracle.add_mutually_exclusive_group(required=True)
    src.add_argument("--mdp", help="MDP text file")
    src.add_argument(
        "--random-mdp",
        nargs=3,
        metavar=("N_STATES", "N_ACTIONS", "SEED"),
        type=int,
        help="generate a seeded random MDP",
    )
    oracle.add_argument("--features", default=None, help="feature matrix text file (with --mdp)")
    oracle.add_argument("--d", type=int, default=None, help="random feature count")
    oracle.add_argument("--feature-seed", type=int, default=0, help="random feature seed")

    sub.add_parser("list-domains", help="list benchmark domains and their config keys")
    return parser


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    from .runner import run_experiment

    result = run_experiment(config, jobs=args.jobs, out_dir=args.out, plot=args.plot)
    out = args.out if args.out is not None else config.out_dir
    print(f"wrote {2 * len(result.learners)} CSV files to {out}")
    for lr in result.learners:
        note = f" (diverged in {len(lr.diverged)}/{config.runs} runs)" if lr.diverged else ""
        print(
            f"  {lr.name}: final rmspbe mean {lr.final_rmspbe_mean:.6g}, "
            f"final rmse mean {lr.final_rmse_mean:.6g}{note}"
        )
    return 0


def _cmd_oracle(args) -> int:
    from .oracle import oracle_from_file, oracle_from_random

    if args.mdp is not None:
        report = oracle_from_file(
            args.mdp, features_path=args.features, d=args.d, feature_seed=args.feature_seed
        )
    else:
        n_states, n_actions, seed = args.random_mdp
        report = oracle_from_random(n_states, n_actions, seed, d=args.d)
    print(report, end="")
    return 0


def _cmd_list_domains() -> int:
    for name in DOMAINS:
        keys = DOMAIN_KEYS[name]
        print(name)
        if not keys:
            print("  (no [domain] keys)")
        for key, (_, default) in keys.items():
            print(f"  {key} (default {default})")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"obliquetd: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "list-domains":
            return _cmd_list_domains()
        raise _UsageError(f"unknown command {args.command!r}")
    except (ConfigError, ObliqueTDError, ValueError, _UsageError) as exc:
        print(f"obliquetd: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"obliquetd: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
