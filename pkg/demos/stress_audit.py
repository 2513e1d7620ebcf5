"""Record a contended workload, then audit what the threads agreed on.

The ledger audit cross-checks per-key add/remove bookkeeping against the
final table scan; the structural audit walks the buckets at quiescence.

Run with: python3 demos/stress_audit.py
"""

from hopscotch.checker import ledger_violations, structural_audit
from hopscotch.harness import WorkloadConfig, run_recorded_stress


def main() -> None:
    cfg = WorkloadConfig(capacity_log2=10, load_factor=0.5, read_pct=30.0,
                         threads=4, seed=9)
    history, table, initial = run_recorded_stress(cfg, 40_000,
                                                  prefill_table=True)
    print(f"recorded {len(history)} ops on {cfg.threads} threads, "
          f"{len(initial)} keys prefilled")

    problems = ledger_violations(history, set(table.member_keys()),
                                 initial_keys=set(initial))
    print("ledger:", "clean" if not problems else f"{len(problems)} problems")
    for line in problems:
        print("  -", line)

    report = structural_audit(table)
    print(report.text())


if __name__ == "__main__":
    main()
