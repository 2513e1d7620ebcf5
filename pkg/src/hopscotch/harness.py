"""Workload driver: prefill, timed mixed workloads, CSV emission.

A workload is a (table kind, shape, mix, thread count) tuple run for a fixed
wall-clock duration and repeated. Each thread draws keys uniformly from a
keyrange of twice the target member count, flips a read/update coin per the
configured percentage, and alternates adds with removes on the update side,
which keeps occupancy stationary at the prefilled load factor. Throughput is
reported in operations per microsecond, the conventional unit for this kind
of table.

CSV rows follow a fixed schema (one row per repetition) so downstream
tooling can consume files from many runs appended together:

    table,capacity_log2,load_factor,read_pct,threads,rep,duration_secs,total_ops,ops_per_usec
"""

import csv
import os
import random
import statistics
import threading
import time
import warnings
from dataclasses import dataclass, field

from .baselines import LockedHopscotchSet
from .checker import History, OpRecord
from .core import LockFreeHopscotchSet, TableConfig

CSV_FIELDS = ("table", "capacity_log2", "load_factor", "read_pct", "threads",
              "rep", "duration_secs", "total_ops", "ops_per_usec")

TABLE_KINDS = ("hs-lockfree", "hs-locked")


@dataclass(frozen=True)
class WorkloadConfig:
    table: str = "hs-lockfree"
    capacity_log2: int = 20
    load_factor: float = 0.6
    read_pct: float = 90.0
    threads: int = 1
    duration_secs: float = 2.0
    reps: int = 3
    seed: int = 1

    def __post_init__(self):
        if self.table not in TABLE_KINDS:
            raise ValueError(f"table must be one of {TABLE_KINDS}")
        if not 3 <= self.capacity_log2 <= 28:
            raise ValueError("capacity_log2 must be in 3..28")
        if not 0.0 < self.load_factor < 1.0:
            raise ValueError("load_factor must be in (0, 1)")
        if not 0.0 <= self.read_pct <= 100.0:
            raise ValueError("read_pct must be in 0..100")
        if self.threads < 1 or self.duration_secs <= 0 or self.reps < 1:
            raise ValueError("threads, duration_secs and reps must be positive")

    @property
    def capacity(self) -> int:
        return 1 << self.capacity_log2

    @property
    def keyrange(self) -> int:
        """Twice the target member count, so half of random keys are present."""
        return max(2, int(self.capacity * self.load_factor * 2))

    @property
    def target_occupancy(self) -> int:
        return round(self.capacity * self.load_factor)


@dataclass
class RepResult:
    rep: int
    total_ops: int
    ops_per_usec: float
    per_thread: list
    occupancy: float  # members / capacity after the run
    first_op_lag_ns: list | None = None  # vs barrier release, when sampled


@dataclass
class BenchResult:
    config: WorkloadConfig
    reps: list = field(default_factory=list)

    @property
    def mean_ops_per_usec(self) -> float:
        return statistics.fmean(r.ops_per_usec for r in self.reps)

    @property
    def max_occupancy_error(self) -> float:
        lf = self.config.load_factor
        return max(abs(r.occupancy - lf) for r in self.reps)


def make_table(cfg: WorkloadConfig):
    table_config = TableConfig.sized(cfg.capacity_log2, seed=cfg.seed)
    if cfg.table == "hs-locked":
        return LockedHopscotchSet(table_config, concurrency=cfg.threads)
    return LockFreeHopscotchSet(table_config)


def prefill(table, cfg: WorkloadConfig) -> list[int]:
    """Insert ``target_occupancy`` distinct keys drawn from the keyrange."""
    rng = random.Random(f"prefill:{cfg.seed}")
    chosen = rng.sample(range(1, cfg.keyrange + 1), cfg.target_occupancy)
    for key in chosen:
        table.add(key)
    return chosen


def _pin_current_thread(cpu: int) -> None:
    try:
        os.sched_setaffinity(0, {cpu})
    except (AttributeError, OSError) as exc:
        warnings.warn(f"thread pinning unavailable: {exc!r}", RuntimeWarning)


def _cpu_list(threads: int) -> list:
    try:
        cpus = sorted(os.sched_getaffinity(0))
    except (AttributeError, OSError):
        return [None] * threads
    return [cpus[i % len(cpus)] for i in range(threads)]


def _mix_worker(table, cfg, tid, barrier, counts, cpu, stop_first_op):
    rng = random.Random(f"mix:{cfg.seed}:{tid}")
    contains = table.contains
    add = table.add
    remove = table.remove
    keyrange = cfg.keyrange
    read_cut = cfg.read_pct / 100.0
    adding = bool(tid & 1)  # stagger so update threads alternate out of phase
    if cpu is not None:
        _pin_current_thread(cpu)
    ops = 0
    barrier.wait()
    deadline = time.monotonic() + cfg.duration_secs
    if stop_first_op is not None:
        stop_first_op[tid] = time.monotonic_ns()
    while time.monotonic() < deadline:
        key = rng.randrange(1, keyrange + 1)
        if rng.random() < read_cut:
            contains(key)
        elif adding := not adding:
            add(key)
        else:
            remove(key)
        ops += 1
    counts[tid] = ops


def run_benchmark(cfg: WorkloadConfig, *, pin: bool = True,
                  first_op_stamps: bool = False) -> BenchResult:
    """Fresh table per repetition; all threads released by one barrier.

    ``first_op_stamps`` records each thread's first-op timestamp so tests
    can verify no thread starts counting before the others are ready.
    """
    result = BenchResult(cfg)
    cpus = _cpu_list(cfg.threads) if pin else [None] * cfg.threads
    for rep in range(cfg.reps):
        table = make_table(cfg)
        prefill(table, cfg)
        barrier = threading.Barrier(cfg.threads + 1)
        counts = [0] * cfg.threads
        stamps = [0] * cfg.threads if first_op_stamps else None
        threads = [
            threading.Thread(
                target=_mix_worker,
                args=(table, cfg, tid, barrier, counts, cpus[tid], stamps),
            )
            for tid in range(cfg.threads)
        ]
        for t in threads:
            t.start()
        barrier.wait()
        release_ns = time.monotonic_ns()
        for t in threads:
            t.join()
        total = sum(counts)
        rep_result = RepResult(
            rep=rep,
            total_ops=total,
            ops_per_usec=total / (cfg.duration_secs * 1e6),
            per_thread=list(counts),
            occupancy=len(table) / cfg.capacity,
        )
        if first_op_stamps:
            rep_result.first_op_lag_ns = [s - release_ns for s in stamps]
        result.reps.append(rep_result)
        drift = abs(rep_result.occupancy - cfg.load_factor)
        if drift > 0.02:
            warnings.warn(
                f"occupancy drifted {drift:.3f} from load factor "
                f"{cfg.load_factor} (rep {rep})",
                RuntimeWarning,
            )
    return result


def emit_csv(path, result: BenchResult) -> None:
    """Append one row per repetition, writing the header only when needed."""
    need_header = not os.path.exists(path) or os.path.getsize(path) == 0
    cfg = result.config
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if need_header:
            writer.writerow(CSV_FIELDS)
        for rep in result.reps:
            writer.writerow([
                cfg.table, cfg.capacity_log2, cfg.load_factor, cfg.read_pct,
                cfg.threads, rep.rep, cfg.duration_secs, rep.total_ops,
                f"{rep.ops_per_usec:.6f}",
            ])


def run_recorded_stress(cfg: WorkloadConfig, total_ops: int,
                        prefill_table: bool = False):
    """Fixed op budget split across threads, every op recorded.

    Returns (history, table, initial_keys). Orders of magnitude slower than
    the timed benchmark; meant for audit runs, not throughput numbers.
    """
    table = make_table(cfg)
    initial = prefill(table, cfg) if prefill_table else []
    per_thread = total_ops // cfg.threads
    barrier = threading.Barrier(cfg.threads)
    buffers = [[] for _ in range(cfg.threads)]
    failures = []

    def body(tid):
        rng = random.Random(f"stress:{cfg.seed}:{tid}")
        contains = table.contains
        add = table.add
        remove = table.remove
        keyrange = cfg.keyrange
        read_cut = cfg.read_pct / 100.0
        adding = bool(tid & 1)
        buffer = buffers[tid]
        record = buffer.append
        clock = time.monotonic_ns
        try:
            barrier.wait()
            for _ in range(per_thread):
                key = rng.randrange(1, keyrange + 1)
                if rng.random() < read_cut:
                    kind, op = "contains", contains
                elif adding := not adding:
                    kind, op = "add", add
                else:
                    kind, op = "remove", remove
                invoked = clock()
                outcome = op(key)
                record(OpRecord(tid, kind, key, outcome, invoked, clock()))
        except BaseException as exc:
            failures.append(exc)

    threads = [threading.Thread(target=body, args=(tid,))
               for tid in range(cfg.threads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failures:
        raise failures[0]
    history: History = []
    for buffer in buffers:
        history.extend(buffer)
    return history, table, initial
