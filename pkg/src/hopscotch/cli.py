"""Command line front end for the workload harness.

Three modes:

* ``bench``  timed throughput runs, optionally appended to a CSV file
* ``stress`` recorded mixed workload followed by ledger and structural
  audits; exits non-zero if either audit finds a violation
* ``audit``  prefill only, then the structural audit and occupancy report

The CSV schema and flags are stable interfaces; plotting tools consume the
files without importing this package.
"""

import argparse
import sys

from .checker import ledger_violations, structural_audit
from .harness import (TABLE_KINDS, WorkloadConfig, emit_csv, run_benchmark,
                      make_table, prefill, run_recorded_stress)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopscotch-bench",
        description="Benchmark and audit driver for the hopscotch set tables.",
    )
    parser.add_argument("--table", choices=TABLE_KINDS, default="hs-lockfree")
    parser.add_argument("--capacity-log2", type=int, default=20)
    parser.add_argument("--load-factor", type=float, default=0.6)
    parser.add_argument("--read-pct", type=float, default=90.0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--duration-secs", type=float, default=2.0)
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--csv", metavar="PATH", default=None,
                        help="append one row per repetition to this file")
    parser.add_argument("--mode", choices=("bench", "stress", "audit"),
                        default="bench")
    return parser


def _config(args) -> WorkloadConfig:
    return WorkloadConfig(
        table=args.table,
        capacity_log2=args.capacity_log2,
        load_factor=args.load_factor,
        read_pct=args.read_pct,
        threads=args.threads,
        duration_secs=args.duration_secs,
        reps=args.reps,
        seed=args.seed,
    )


def _mode_bench(cfg, args) -> int:
    result = run_benchmark(cfg)
    for rep in result.reps:
        print(f"rep {rep.rep}: {rep.total_ops} ops in {cfg.duration_secs}s "
              f"-> {rep.ops_per_usec:.4f} ops/us "
              f"(occupancy {rep.occupancy:.3f})")
    print(f"mean over {cfg.reps} reps: {result.mean_ops_per_usec:.4f} ops/us")
    if args.csv:
        emit_csv(args.csv, result)
        print(f"appended {len(result.reps)} rows to {args.csv}")
    return 0


def _mode_stress(cfg, args) -> int:
    # Budget roughly matches what the timed run would execute serially.
    total_ops = max(10_000, int(50_000 * cfg.duration_secs * cfg.threads))
    history, table, initial = run_recorded_stress(cfg, total_ops,
                                                  prefill_table=True)
    print(f"recorded {len(history)} ops across {cfg.threads} threads")
    problems = ledger_violations(history, table.member_keys(),
                                 initial_keys=initial)
    report = structural_audit(table)
    print(report.text())
    print(f"ledger audit: {'CLEAN' if not problems else 'VIOLATIONS'}")
    for line in problems:
        print(f"  - {line}")
    print(report.json_lines())
    return 0 if report.ok and not problems else 1


def _mode_audit(cfg, args) -> int:
    table = make_table(cfg)
    prefill(table, cfg)
    occupancy = len(table) / cfg.capacity
    report = structural_audit(table)
    print(report.text())
    print(f"occupancy {occupancy:.4f} vs load factor {cfg.load_factor}")
    print(report.json_lines())
    return 0 if report.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config(args)
    mode = {"bench": _mode_bench, "stress": _mode_stress,
            "audit": _mode_audit}[args.mode]
    return mode(cfg, args)


if __name__ == "__main__":
    sys.exit(main())
