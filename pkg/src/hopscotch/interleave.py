"""Deterministic interleaving control for threaded scenarios.

Worker threads are real threads, but every operation on a hooked
:class:`AtomicWordArray` parks the calling thread until a scheduler grants
it one step. Only one worker runs at a time and every shared access sits
behind a hook, so a run is a pure function of the grant sequence: the same
schedule always produces the same execution. The code between two hooked
operations executes as one atomic block.

``explore_interleavings`` enumerates schedules by replay: run once following
a forced prefix, note every step where another thread was runnable, and push
the deviating prefixes. An optional preemption bound counts the switches
away from a still-runnable thread and prunes schedules beyond it, which
keeps toy scenarios exhaustively checkable (every schedule with at most N
preemptions) without walking the full factorial space.

``StallPoint`` is the degenerate single-pause case for progress tests: park
one chosen thread at its Nth shared access while the rest free-run.
"""

import threading
import time
from dataclasses import dataclass, field
from typing import Callable

_WAIT_STEP = 1.0
_DEADLINE = 30.0


@dataclass
class Scenario:
    """One schedulable experiment.

    arrays   AtomicWordArrays whose operations become scheduling points
    workers  one callable per thread
    check    optional post-run validation; raise to report a failure
    """

    arrays: list
    workers: list
    check: Callable | None = None


@dataclass
class Exploration:
    schedules: int = 0
    failures: list = field(default_factory=list)  # (schedule, repr(err))
    complete: bool = True  # False when max_schedules cut the walk short
    diverged: int = 0  # runs that hit the step cap and were drained fairly

    @property
    def ok(self) -> bool:
        return not self.failures


class _Gate:
    """Parks hooked threads; the driver grants one step at a time."""

    def __init__(self, count: int):
        self._cond = threading.Condition()
        self._state = ["running"] * count
        self._granted = [False] * count
        self._threads: dict[int, int] = {}

    def register(self):
        self._threads[threading.get_ident()] = len(self._threads)

    def hook(self, op, words, index):
        me = self._threads.get(threading.get_ident())
        if me is None:
            return  # driver touching the arrays during setup or check
        with self._cond:
            self._state[me] = "parked"
            self._cond.notify_all()
            while not self._granted[me]:
                self._cond.wait(_WAIT_STEP)
            self._granted[me] = False
            self._state[me] = "running"

    def finished(self):
        me = self._threads.get(threading.get_ident())
        with self._cond:
            self._state[me] = "done"
            self._cond.notify_all()

    def runnable(self) -> list[int]:
        """Block until no thread is mid-step; return the parked ones."""
        deadline = threading.TIMEOUT_MAX
        with self._cond:
            waited = 0.0
            while "running" in self._state:
                self._cond.wait(_WAIT_STEP)
                waited += _WAIT_STEP
                if waited >= _DEADLINE:
                    raise RuntimeError(
                        f"scheduler stuck; thread states {self._state}"
                    )
            return [i for i, s in enumerate(self._state) if s == "parked"]

    def grant(self, i: int):
        with self._cond:
            self._granted[i] = True
            # Mark the grantee running here, not when it wakes: otherwise the
            # driver can observe the stale "parked" state and re-grant, and
            # the two grants coalesce into one consumed step.
            self._state[i] = "running"
            self._cond.notify_all()


def run_scheduled(scenario: Scenario, script=(), max_steps: int = 240):
    """Run once, following ``script`` then preferring the running thread.

    Returns (schedule taken, runnable sets seen, error, diverged). A run
    that exceeds ``max_steps`` has livelocked on an unfair continuation
    (lock-free retries starve without preemption); it drains round-robin,
    which guarantees completion, and is flagged diverged so exploration
    stops branching inside it. The error is the first worker exception or
    check failure.
    """
    gate = _Gate(len(scenario.workers))
    for words in scenario.arrays:
        words.hook = gate.hook
    errors = []

    def body(fn):
        gate.register()
        try:
            fn()
        except BaseException as exc:
            errors.append(exc)
        finally:
            gate.finished()

    threads = []
    for fn in scenario.workers:
        t = threading.Thread(target=body, args=(fn,))
        threads.append(t)
        t.start()
        # Serialize registration; idents are only written before any hook.
        while t.ident not in gate._threads and t.is_alive():
            time.sleep(0.0001)

    taken = []
    options = []
    previous = None
    rotate = 0
    while True:
        runnable = gate.runnable()
        if not runnable:
            break
        step = len(taken)
        if step >= max_steps:
            # Fair drain: every thread gets granted in turn, so lock-free
            # retry loops that were starving now observe progress and exit.
            choice = runnable[rotate % len(runnable)]
            rotate += 1
            gate.grant(choice)
            continue
        if step < len(script) and script[step] in runnable:
            choice = script[step]
        elif previous in runnable:
            choice = previous  # stay on the same thread: no preemption
        else:
            choice = runnable[0]
        taken.append(choice)
        options.append(tuple(runnable))
        previous = choice
        gate.grant(choice)
    for t in threads:
        t.join()
    for words in scenario.arrays:
        words.hook = None
    error = errors[0] if errors else None
    if error is None and scenario.check is not None:
        try:
            scenario.check()
        except BaseException as exc:
            error = exc
    return taken, options, error, rotate > 0


def _preemptions(schedule, options) -> int:
    count = 0
    for step in range(1, len(schedule)):
        previous = schedule[step - 1]
        if schedule[step] != previous and previous in options[step]:
            count += 1
    return count


def explore_interleavings(factory: Callable[[], Scenario], *,
                          preemption_bound: int | None = 2,
                          max_schedules: int | None = None) -> Exploration:
    """Replay-DFS over schedules of ``factory()``'s scenario.

    ``factory`` must build an equivalent fresh scenario each call; a run is
    deterministic in its schedule, so the walk covers each schedule once.
    """
    result = Exploration()
    pending = [()]
    while pending:
        if max_schedules is not None and result.schedules >= max_schedules:
            result.complete = False
            break
        script = pending.pop()
        taken, options, error, diverged = run_scheduled(factory(), script)
        result.schedules += 1
        result.diverged += diverged
        if error is not None:
            result.failures.append((tuple(taken), repr(error)))
        # Branch only past the forced prefix; earlier deviations were queued
        # when their own prefix ran.
        for step in range(len(script), len(taken)):
            chosen = taken[step]
            base = list(taken[:step])
            for alternative in options[step]:
                if alternative == chosen:
                    continue
                candidate = base + [alternative]
                if preemption_bound is not None:
                    if (_preemptions(candidate, options[:step + 1])
                            > preemption_bound):
                        continue
                pending.append(tuple(candidate))
    return result


class StallPoint:
    """Pause one thread at its Nth hooked operation until released.

    The victim calls :meth:`bind` first thing; other threads pass through
    the hook untouched. ``wait_until_stalled`` lets the driver synchronize
    with the victim reaching the pause.
    """

    def __init__(self, stall_at: int):
        self.stall_at = stall_at
        self._victim: int | None = None
        self._count = 0
        self._stalled = threading.Event()
        self._release = threading.Event()

    def bind(self):
        self._victim = threading.get_ident()

    def hook(self, op, words, index):
        if threading.get_ident() != self._victim:
            return
        self._count += 1
        if self._count == self.stall_at:
            self._stalled.set()
            if not self._release.wait(timeout=_DEADLINE):
                raise RuntimeError("stalled thread was never released")

    def wait_until_stalled(self, timeout: float = _DEADLINE) -> bool:
        return self._stalled.wait(timeout)

    def release(self):
        self._release.set()
