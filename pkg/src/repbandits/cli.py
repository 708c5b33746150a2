"""Command line entry point.

    repbandits mab --config mab.yaml --seed 7 --workers 4 --out results/
    repbandits linbandit --config lin.yaml --out results/
    repbandits check repmean

Exit codes: 0 success, 2 configuration error, 3 self-check failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .checks import SUITES
from .config import load_config
from .errors import ConfigError
from .experiment import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SUITE = 3


def _u64(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a decimal integer: {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repbandits",
                                     description="Replicable bandit experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("mab", "K-armed bandit paired-run experiment"),
                            ("linbandit", "linear bandit paired-run experiment")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML/JSON experiment config")
        p.add_argument("--seed", type=_u64, default=None, help="master seed (overrides config)")
        p.add_argument("--workers", type=int, default=None, help="worker processes")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("check", help="Monte Carlo self-check of an estimator")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--seed", type=_u64, default=0)
    return parser


def _experiment(args, kind: str) -> int:
    overrides = {"master_seed": args.seed, "workers": args.workers}
    try:
        cfg = load_config(args.config, kind=kind, overrides=overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.output
    if out is None:
        print("config error: no output directory (use --out or set 'output')", file=sys.stderr)
        return EXIT_CONFIG
    for path in run_experiment(cfg, out):
        print(f"wrote {path}")
    return EXIT_OK


def _check(args) -> int:
    results = SUITES[args.suite](seed=args.seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    if failed:
        for r in failed:
            print(f"failed: {r.name} (observed {r.observed:.4f}, required "
                  f"{'>=' if r.kind == 'at_least' else '<='} {r.required:.4f})", file=sys.stderr)
        return EXIT_SUITE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "check":
        return _check(args)
    return _experiment(args, "mab" if args.command == "mab" else "linear")


if __name__ == "__main__":
    sys.exit(main())
