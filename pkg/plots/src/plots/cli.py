"""Command line front end: render figures from a benchmark CSV."""

import argparse
import sys
from pathlib import Path

from .figures import LOCKED_BASELINE, plot_grid, plot_single_thread


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render throughput figures from a benchmark CSV.")
    parser.add_argument("--csv", required=True, metavar="PATH",
                        help="file produced by the benchmark harness")
    parser.add_argument("--out", required=True, metavar="DIR",
                        help="directory for the generated images")
    parser.add_argument("--single-thread", action="store_true",
                        help="draw the 1-thread relative bar chart instead "
                             "of the grid")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.single_thread:
            out_file = Path(args.out) / "single_thread.png"
            ratios = plot_single_thread(args.csv, out_file)
            for table in sorted(ratios):
                print(f"{table}: {ratios[table]:.3f}x vs {LOCKED_BASELINE}")
            print(f"wrote {out_file}")
        else:
            _, written = plot_grid(args.csv, args.out)
            for path in written:
                print(f"wrote {path}")
        return 0
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
