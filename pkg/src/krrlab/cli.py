"""Command line interface.

    krrlab run <config.toml> [--jobs N] [--out DIR]
    krrlab plot <report.csv> [--out FILE]

Exit codes: 0 success, 1 assertion failure, 2 configuration error.
The environment variable KRRLAB_SEED overrides the config master seed.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .experiments import RUNNERS
from .report import plot_report


def build_parser():
    parser = argparse.ArgumentParser(
        prog="krrlab",
        description="Numerical laboratory for kernel ridge regression over "
                    "Hilbert scales",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment named in a config")
    p_run.add_argument("config", help="TOML experiment configuration")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="worker processes for trial parallelism")
    p_run.add_argument("--out", default=None,
                       help="output directory (default: alongside the config)")

    p_plot = sub.add_parser("plot", help="render an SVG chart from a rates CSV")
    p_plot.add_argument("report", help="rates report CSV")
    p_plot.add_argument("--out", default=None,
                        help="output SVG path (default: report path with .svg)")
    return parser


def cmd_run(args):
    seed_env = os.environ.get("KRRLAB_SEED")
    try:
        cfg = load_config(args.config,
                          seed_override=int(seed_env) if seed_env else None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: bad KRRLAB_SEED: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or os.path.join(
        os.path.dirname(os.path.abspath(args.config)),
        f"out-{cfg.experiment}")
    os.makedirs(out_dir, exist_ok=True)

    runner = RUNNERS[cfg.experiment]
    try:
        assertions = runner(cfg, out_dir, jobs=max(1, args.jobs))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    failed = 0
    for a in assertions:
        print(a.line())
        failed += not a.passed
    print(f"{cfg.experiment}: {len(assertions) - failed}/{len(assertions)} "
          f"checks passed; artifacts in {out_dir}")
    return 1 if failed else 0


def cmd_plot(args):
    out = args.out or os.path.splitext(args.report)[0] + ".svg"
    try:
        plot_report(args.report, out)
    except (OSError, ValueError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_plot(args)


if __name__ == "__main__":
    sys.exit(main())
