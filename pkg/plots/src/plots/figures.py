"""Figure builders: throughput-vs-threads panels and a 1-thread bar chart.

Aggregation is separated from drawing (grid_series) so tests can verify the
plotted numbers without decoding image files. Same CSV in, same series out.
"""

import statistics
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .reader import read_rows

LOCKED_BASELINE = "hs-locked"


def grid_series(rows):
    """Per-panel line data: mean over reps with min/max at each point.

    Returns {(load_factor, read_pct): {table: series}} where a series maps
    "threads", "mean", "lo", "hi" to parallel lists sorted by threads.
    """
    samples = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for row in rows:
        cell = (row.load_factor, row.read_pct)
        samples[cell][row.table][row.threads].append(row.ops_per_usec)
    series = {}
    for cell in sorted(samples):
        series[cell] = {}
        for table in sorted(samples[cell]):
            by_threads = samples[cell][table]
            threads = sorted(by_threads)
            values = [by_threads[t] for t in threads]
            series[cell][table] = {
                "threads": threads,
                "mean": [statistics.fmean(v) for v in values],
                "lo": [min(v) for v in values],
                "hi": [max(v) for v in values],
            }
    return series


def plot_grid(csv_path, out_dir):
    """One figure per (load_factor, read_pct) cell, one line per table kind.

    Returns (series, written paths). Nothing is written until the whole CSV
    parses, so a malformed file leaves the output directory untouched.
    """
    series = grid_series(read_rows(csv_path))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for (load_factor, read_pct), per_table in series.items():
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        ticks = sorted({t for data in per_table.values()
                        for t in data["threads"]})
        for table, data in per_table.items():
            spread = [[m - lo for m, lo in zip(data["mean"], data["lo"])],
                      [hi - m for hi, m in zip(data["hi"], data["mean"])]]
            ax.errorbar(data["threads"], data["mean"], yerr=spread,
                        marker="o", capsize=3, label=table)
        ax.set_xlabel("threads")
        ax.set_ylabel("throughput (ops/us)")
        ax.set_xticks(ticks)
        ax.set_ylim(bottom=0)
        ax.set_title(f"load {load_factor:g}, reads {read_pct:g}%")
        ax.legend()
        fig.tight_layout()
        path = out / f"grid_load{load_factor:g}_reads{read_pct:g}.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return series, written


def single_thread_ratios(rows):
    """1-thread mean throughput per table, normalized to the locked table."""
    ones = [r for r in rows if r.threads == 1]
    means = {}
    for table in sorted({r.table for r in ones}):
        means[table] = statistics.fmean(
            [r.ops_per_usec for r in ones if r.table == table])
    baseline = means.get(LOCKED_BASELINE)
    if baseline is None:
        raise ValueError(
            f"no threads=1 rows for the {LOCKED_BASELINE} baseline")
    return {table: mean / baseline for table, mean in means.items()}


def plot_single_thread(csv_path, out_file):
    """Bar chart of 1-thread throughput relative to the locked table.

    Returns the ratio per table ({LOCKED_BASELINE: 1.0} by construction).
    """
    ratios = single_thread_ratios(read_rows(csv_path))
    out = Path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(4.0, 3.5))
    tables = sorted(ratios)
    ax.bar(tables, [ratios[t] for t in tables])
    ax.axhline(1.0, linestyle="--", linewidth=1, color="gray")
    ax.set_ylabel(f"1-thread throughput vs {LOCKED_BASELINE}")
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return ratios
