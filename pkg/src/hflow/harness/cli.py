"""Command line entry point: ``hflow <operation> --config FILE [--out DIR] [--seed N]``."""

from __future__ import annotations

import argparse
import json
import sys

from .config import OPERATIONS, SEED_MAX, ConfigError, load_config
from .runner import EXIT_CONFIG, run_experiment


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64 - 1]")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="hflow", description="Run gradient-flow and proximal experiments on Hadamard spaces.")
    parser.add_argument("operation", choices=OPERATIONS)
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out", default="hflow-out", help="directory for trace.csv and summary.json")
    parser.add_argument("--seed", type=_seed, default=None, help="overrides the config seed")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are config errors here
        return EXIT_CONFIG if exc.code else 0
    try:
        config = load_config(args.config)
        if config["operation"] != args.operation:
            raise ConfigError(f"config is for {config['operation']!r}, not {args.operation!r}", "$.operation")
        summary = run_experiment(config, args.out, args.seed)
    except ConfigError as err:
        print(f"hflow: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(summary.to_json(), indent=2, sort_keys=True))
    print(f"hflow: {summary.operation} {summary.status} in {summary.runtime:.3f}s", file=sys.stderr)
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())
