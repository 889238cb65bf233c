"""Command-line entry point.

Exit codes: 0 success, 2 a boosting run failed (records are still
persisted), 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .harness import (
    EXPERIMENT_KINDS,
    make_config,
    parse_config,
    report,
    run_experiment,
)

EXIT_OK = 0
EXIT_BOOST_FAILED = 2
EXIT_BAD_CONFIG = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boostlab",
        description="Seeded boosting experiments with CSV output.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="INI config file with a [%s] section" % kind)
        p.add_argument("--seed", type=int, help="master seed (u64)")
        p.add_argument("--reps", type=int, help="number of repetitions")
        p.add_argument("--out", help="output directory (default $BOOSTLAB_OUT or ./runs)")
        p.add_argument(
            "--snapshots", choices=("all", "window", "none"),
            help="distribution snapshot retention",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "seed": args.seed,
        "reps": args.reps,
        "out": args.out,
        "snapshots": args.snapshots,
    }
    try:
        if args.config:
            cfg = parse_config(args.config, args.kind, overrides)
        else:
            cfg = make_config(
                args.kind, **{k: v for k, v in overrides.items() if v is not None}
            )
        records, paths = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    print(report(records))
    for path in paths:
        print(f"wrote {path}")
    if any(rec.failed for rec in records):
        return EXIT_BOOST_FAILED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
