"""Sweep both table kinds across a small workload grid into a CSV file.

The output feeds the companion plotting package:

    python3 demos/benchmark_grid.py --out bench.csv
    plots --csv bench.csv --out figures/

Defaults keep the sweep short; raise --duration-secs and --reps for
smoother curves.
"""

import argparse

from hopscotch.harness import (TABLE_KINDS, WorkloadConfig, emit_csv,
                               run_benchmark)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="bench.csv")
    parser.add_argument("--capacity-log2", type=int, default=12)
    parser.add_argument("--duration-secs", type=float, default=0.2)
    parser.add_argument("--reps", type=int, default=2)
    parser.add_argument("--threads", type=int, nargs="+",
                        default=[1, 2, 4, 8])
    args = parser.parse_args(argv)

    cells = [(0.4, 90.0), (0.8, 60.0)]
    for load_factor, read_pct in cells:
        for threads in args.threads:
            for kind in TABLE_KINDS:
                cfg = WorkloadConfig(table=kind,
                                     capacity_log2=args.capacity_log2,
                                     load_factor=load_factor,
                                     read_pct=read_pct,
                                     threads=threads,
                                     duration_secs=args.duration_secs,
                                     reps=args.reps)
                result = run_benchmark(cfg)
                emit_csv(args.out, result)
                print(f"{kind} load={load_factor} reads={read_pct}% "
                      f"threads={threads}: "
                      f"{result.mean_ops_per_usec:.4f} ops/us")
    print(f"rows appended to {args.out}")


if __name__ == "__main__":
    main()
