"""Correctness oracles for concurrent set histories and table states.

Three independent checks, in increasing cost:

* ``structural_audit``: quiescent scan of a table against its own shape
  invariants (no transient states, bitmap/member agreement, neighborhood
  bounds, no duplicate keys).
* ``ledger_audit``: per-key accounting over a recorded history. Sound
  necessary conditions only, so it scales to millions of operations: at
  every instant, completed successful removes never exceed invoked
  successful adds (plus initial membership), the net completed surplus never
  exceeds one, and the final surplus matches a final scan of the table. Any
  execution that loses or duplicates a key trips one of these; no
  linearizable execution does.
* ``check_linearizable``: exhaustive search for a witness ordering of a
  small history. Per-key decomposition keeps the search tractable (set
  operations on distinct keys commute), with memoized DFS inside each key.

Histories are flat lists of :class:`OpRecord`; helpers at the bottom run
recorded workloads on real threads.
"""

import json
import random
import sys
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .core import EMPTY, MEMBER, NIL_KEY, STATE_NAMES


class OpRecord(NamedTuple):
    tid: int
    kind: str  # "add" | "remove" | "contains"
    key: int
    result: bool
    invoked: int   # monotonic ns before the call
    responded: int  # monotonic ns after the call


History = list


class SearchBoundExceeded(Exception):
    """History too large for exhaustive linearizability search."""


@dataclass
class LinearizationResult:
    ok: bool
    witness: list | None = None           # records in linearized order
    violating_prefix: list | None = None  # shortest response-closed failure

    def __bool__(self) -> bool:
        return self.ok


def _apply_op(kind: str, result: bool, member: bool):
    """(legal?, membership after) for one op against boolean state."""
    if kind == "add":
        return result == (not member), member or result
    if kind == "remove":
        return result == member, member and not result
    if kind == "contains":
        return result == member, member
    raise ValueError(f"unknown op kind {kind!r}")


def _search_one_key(records, initially_member: bool):
    """Witness order for one key's records, or None.

    DFS over candidate first ops (those invoked before every pending
    response), memoizing failed (pending set, membership) states.
    """
    n = len(records)
    invoked = [r.invoked for r in records]
    responded = [r.responded for r in records]
    dead: set = set()
    path: list = []

    def dfs(remaining: frozenset, member: bool) -> bool:
        if not remaining:
            return True
        state = (remaining, member)
        if state in dead:
            return False
        horizon = min(responded[i] for i in remaining)
        for i in remaining:
            if invoked[i] > horizon:
                continue  # some pending op completed before i began
            legal, after = _apply_op(records[i].kind, records[i].result, member)
            if not legal:
                continue
            path.append(i)
            if dfs(remaining - {i}, after):
                return True
            path.pop()
        dead.add(state)
        return False

    if dfs(frozenset(range(n)), initially_member):
        return [records[i] for i in path]
    return None


def _merge_witnesses(history, per_key_witness):
    """Interleave per-key witnesses into one global order.

    Each key's k-th op gets a linearization point inside its own interval,
    pushed right just past the previous op's point. Points always fit
    because each witness respects its own real-time order and keys do not
    constrain each other.
    """
    points = {}
    for witness in per_key_witness.values():
        previous = -1
        for rec in witness:
            # Sub-nanosecond resolution so ops sharing a stamp still get
            # strictly increasing points inside their intervals.
            point = max(rec.invoked << 10, previous + 1)
            if point > (rec.responded << 10) + 1023:
                return None  # cannot happen for a correct witness; bail out
            points[id(rec)] = point
            previous = point
    return sorted(history, key=lambda r: points[id(r)])


def _linearize_complete(history, initial_keys) -> list | None:
    by_key: dict = {}
    for rec in history:
        by_key.setdefault(rec.key, []).append(rec)
    per_key = {}
    for key, records in by_key.items():
        witness = _search_one_key(records, key in initial_keys)
        if witness is None:
            return None
        per_key[key] = witness
    merged = _merge_witnesses(history, per_key)
    if merged is None:  # defensive; fall back to any valid interleaving
        merged = [rec for key in per_key for rec in per_key[key]]
    return merged


def check_linearizable(history, max_ops: int = 14,
                       initial_keys=frozenset()) -> LinearizationResult:
    """Exhaustively decide linearizability of a small complete history."""
    if len(history) > max_ops:
        raise SearchBoundExceeded(
            f"history has {len(history)} ops; bound is {max_ops}"
        )
    witness = _linearize_complete(history, initial_keys)
    if witness is not None:
        return LinearizationResult(True, witness=witness)
    ordered = sorted(history, key=lambda r: (r.responded, r.invoked))
    for cut in range(1, len(ordered) + 1):
        if _linearize_complete(ordered[:cut], initial_keys) is None:
            return LinearizationResult(False, violating_prefix=ordered[:cut])
    return LinearizationResult(False, violating_prefix=list(ordered))


# -- ledger audit ----------------------------------------------------------

def ledger_violations(history, final_keys, initial_keys=frozenset()) -> list[str]:
    """Per-key accounting violations; empty means the audit passed."""
    events_by_key: dict = {}
    for rec in history:
        if rec.result and rec.kind in ("add", "remove"):
            events_by_key.setdefault(rec.key, []).append(rec)
    final_keys = set(final_keys)
    problems = []
    for key, records in events_by_key.items():
        base = 1 if key in initial_keys else 0
        adds = sum(1 for r in records if r.kind == "add")
        removes = sum(1 for r in records if r.kind == "remove")
        net = base + adds - removes
        if net not in (0, 1):
            problems.append(
                f"key {key}: {adds} successful adds vs {removes} successful "
                f"removes (initially {base}) nets {net}, outside {{0, 1}}"
            )
            continue
        present = key in final_keys
        if present != bool(net):
            problems.append(
                f"key {key}: ledger nets {net} but final scan says "
                f"{'present' if present else 'absent'}"
            )
            continue
        # Interval conditions: invocations open credit, responses spend it.
        # Sorting responses after invocations at equal stamps keeps legal
        # overlapping pairs from tripping the check.
        sweep = []
        for r in records:
            sweep.append((r.invoked, 0, r.kind))
            sweep.append((r.responded, 1, r.kind))
        sweep.sort()
        adds_invoked = removes_invoked = 0
        adds_done = removes_done = 0
        for _, phase, kind in sweep:
            if phase == 0:
                if kind == "add":
                    adds_invoked += 1
                else:
                    removes_invoked += 1
                continue
            if kind == "add":
                adds_done += 1
                if base + adds_done - removes_invoked > 1:
                    problems.append(
                        f"key {key}: {adds_done} adds completed with only "
                        f"{removes_invoked} removes invoked (initially "
                        f"{base}); a second add succeeded while present"
                    )
                    break
            else:
                removes_done += 1
                if removes_done > base + adds_invoked:
                    problems.append(
                        f"key {key}: {removes_done} removes completed with "
                        f"only {adds_invoked} adds invoked (initially "
                        f"{base}); a remove succeeded while absent"
                    )
                    break
    tracked = set(events_by_key)
    for key in final_keys - tracked - set(initial_keys):
        problems.append(f"key {key}: in final scan but never added")
    for key in set(initial_keys) - final_keys - tracked:
        problems.append(f"key {key}: initially present, untouched, yet gone")
    return problems


def ledger_audit(history, final_keys, initial_keys=frozenset()) -> bool:
    """True iff per-key accounting and the final scan agree; see module doc."""
    return not ledger_violations(history, final_keys, initial_keys)


# -- structural audit --------------------------------------------------------

@dataclass
class AuditReport:
    buckets: int
    members: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def text(self) -> str:
        lines = [
            f"structural audit: {self.members} members in "
            f"{self.buckets} buckets: "
            + ("CLEAN" if self.ok else f"{len(self.violations)} violation(s)")
        ]
        lines.extend(f"  - {v}" for v in self.violations)
        return "\n".join(lines)

    def json_lines(self) -> str:
        rows = [{"event": "summary", "buckets": self.buckets,
                 "members": self.members, "ok": self.ok}]
        rows.extend({"event": "violation", "detail": v}
                    for v in self.violations)
        return "\n".join(json.dumps(row, sort_keys=True) for row in rows)


def structural_audit(table) -> AuditReport:
    """Quiescent shape check; works on any table exposing snapshot()."""
    views = table.snapshot()
    capacity = table.capacity
    h = table.neighborhood
    mask = capacity - 1
    report = AuditReport(buckets=capacity, members=0)
    bad = report.violations.append
    seen_keys: dict = {}
    for view in views:
        state = view.state
        if state not in (EMPTY, MEMBER):
            bad(f"bucket {view.index}: transient state "
                f"{STATE_NAMES[state]} at quiescence")
            continue
        if state == EMPTY:
            if view.key != NIL_KEY:
                bad(f"bucket {view.index}: empty but key slot holds "
                    f"{view.key}")
            continue
        report.members += 1
        key = view.key
        if key == NIL_KEY:
            bad(f"bucket {view.index}: member with nil key")
            continue
        if key in seen_keys:
            bad(f"key {key}: duplicated in buckets "
                f"{seen_keys[key]} and {view.index}")
        seen_keys[key] = view.index
        home = table.home_of(key)
        offset = (view.index - home) & mask
        if offset >= h:
            bad(f"key {key}: bucket {view.index} is {offset} past home "
                f"{home}, outside neighborhood {h}")
        elif not views[home].bitmap >> offset & 1:
            bad(f"key {key}: bit {offset} of bitmap {home} not set for "
                f"bucket {view.index}")
    for view in views:
        bits = view.bitmap
        while bits:
            low = bits & -bits
            bits ^= low
            offset = low.bit_length() - 1
            target = views[(view.index + offset) & mask]
            if offset >= h:
                bad(f"bitmap {view.index}: bit {offset} outside "
                    f"neighborhood {h}")
            elif target.state != MEMBER:
                bad(f"bitmap {view.index}: bit {offset} points at "
                    f"non-member bucket {target.index}")
            elif table.home_of(target.key) != view.index:
                bad(f"bitmap {view.index}: bit {offset} points at key "
                    f"{target.key} homed elsewhere")
    return report


# -- history recording -------------------------------------------------------

@contextmanager
def tight_switch_interval(interval: float = 1e-5):
    """Shrink the interpreter's thread switch window to force interleaving."""
    previous = sys.getswitchinterval()
    sys.setswitchinterval(interval)
    try:
        yield
    finally:
        sys.setswitchinterval(previous)


def timed_call(buffer: list, tid: int, kind: str, op: Callable, key: int):
    invoked = time.monotonic_ns()
    result = op(key)
    buffer.append(OpRecord(tid, kind, key, result,
                           invoked, time.monotonic_ns()))
    return result


def run_recorded(table, scripts) -> History:
    """Run per-thread (kind, key) scripts against ``table``; merged history.

    Records are buffered per thread and merged after the join, so recording
    never synchronizes the threads beyond the start barrier.
    """
    barrier = threading.Barrier(len(scripts))
    buffers = [[] for _ in scripts]
    failures = []

    def body(tid, script):
        buffer = buffers[tid]
        ops = {"add": table.add, "remove": table.remove,
               "contains": table.contains}
        try:
            barrier.wait()
            for kind, key in script:
                timed_call(buffer, tid, kind, op=ops[kind], key=key)
        except BaseException as exc:  # surfaced after join
            failures.append(exc)

    threads = [threading.Thread(target=body, args=(tid, script))
               for tid, script in enumerate(scripts)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failures:
        raise failures[0]
    history: History = []
    for buffer in buffers:
        history.extend(buffer)
    return history


def random_scripts(*, threads: int, ops_per_thread: int, keys,
                   seed: int, update_weight: float = 0.7):
    """Deterministic per-thread op scripts; scheduling stays up to the OS."""
    keys = list(keys)
    scripts = []
    for tid in range(threads):
        rng = random.Random(f"script:{seed}:{tid}")
        script = []
        for _ in range(ops_per_thread):
            if rng.random() < update_weight:
                kind = "add" if rng.random() < 0.5 else "remove"
            else:
                kind = "contains"
            script.append((kind, rng.choice(keys)))
        scripts.append(script)
    return scripts


def colliding_keys(table, home: int, count: int, start: int = 1) -> list[int]:
    """First ``count`` keys whose home bucket is ``home``."""
    out = []
    key = start
    while len(out) < count:
        if key != NIL_KEY and table.home_of(key) == home:
            out.append(key)
        key += 1
    return out
