"""The step scheduler and interleaving explorer, on toy workloads."""

import threading

from hopscotch.interleave import (
    Exploration,
    Scenario,
    StallPoint,
    explore_interleavings,
    run_scheduled,
)
from hopscotch.words import AtomicWordArray


def two_step_scenario():
    """Two workers, two hooked steps each, no shared state."""
    arr = AtomicWordArray(4)

    def worker(base):
        def run():
            arr.store(base, 1)
            arr.store(base + 1, 1)
        return run

    return Scenario(arrays=[arr], workers=[worker(0), worker(2)])


def racy_counter_scenario():
    """Load-then-store increments: the textbook lost update."""
    arr = AtomicWordArray(1)

    def worker():
        value = arr.load(0)
        arr.store(0, value + 1)

    def check():
        assert arr.load(0) == 2, f"lost update: counter is {arr.load(0)}"

    return Scenario(arrays=[arr], workers=[worker, worker], check=check)


def cas_counter_scenario():
    arr = AtomicWordArray(1)

    def worker():
        while True:
            value = arr.load(0)
            if arr.cas(0, value, value + 1):
                return

    def check():
        assert arr.load(0) == 2

    return Scenario(arrays=[arr], workers=[worker, worker], check=check)


def test_single_run_is_deterministic_and_complete():
    taken, options, error, diverged = run_scheduled(two_step_scenario())
    assert error is None
    assert not diverged
    assert sorted(taken) == [0, 0, 1, 1]
    assert len(options) == len(taken)
    replay = run_scheduled(two_step_scenario(), script=tuple(taken))
    assert replay[0] == taken


def test_script_prefix_is_respected():
    taken, _, error, _ = run_scheduled(two_step_scenario(), script=(1, 0, 0))
    assert error is None
    assert taken == [1, 0, 0, 1]


def test_unscripted_continuation_avoids_preemption():
    taken, _, _, _ = run_scheduled(two_step_scenario())
    assert taken == [0, 0, 1, 1]  # stays on a runnable thread until it ends


def test_schedule_counts_match_the_combinatorics():
    """Two independent 2-step workers admit exactly C(4,2) = 6 orders.

    The preemption bound trims them from the outside in: only the two
    block orders at bound 0, plus the two single-switch orders at 1.
    """
    for bound, expected in ((0, 2), (1, 4), (2, 6), (None, 6)):
        result = explore_interleavings(two_step_scenario,
                                       preemption_bound=bound)
        assert result.ok
        assert result.complete
        assert result.schedules == expected, f"bound {bound}"


def test_explorer_finds_the_lost_update():
    result = explore_interleavings(racy_counter_scenario, preemption_bound=1)
    assert not result.ok
    assert any("lost update" in err for _, err in result.failures)
    # The bad schedule preempts between a load and its store.
    schedule, _ = result.failures[0]
    assert len(schedule) == 4


def test_explorer_passes_a_correct_counter():
    result = explore_interleavings(cas_counter_scenario, preemption_bound=2)
    assert result.ok
    assert result.complete
    assert result.schedules > 2


def test_max_schedules_short_circuits():
    result = explore_interleavings(racy_counter_scenario,
                                   preemption_bound=None, max_schedules=2)
    assert result.schedules == 2
    assert not result.complete


def test_livelocked_run_is_drained_fairly():
    """A spin loop that needs the other thread must not hang the driver."""
    arr = AtomicWordArray(2)

    def spinner():
        while not arr.load(0):
            pass

    def setter():
        arr.store(1, 1)  # an unrelated step the scheduler can prefer
        arr.store(0, 1)

    scenario = Scenario(arrays=[arr], workers=[spinner, setter])
    taken, _, error, diverged = run_scheduled(scenario, max_steps=24)
    assert error is None
    assert diverged
    assert len(taken) == 24  # choices past the cap are not recorded


def test_exploration_aggregates_divergence():
    def factory():
        arr = AtomicWordArray(2)

        def spinner():
            while not arr.load(0):
                pass

        def setter():
            arr.store(0, 1)

        return Scenario(arrays=[arr], workers=[spinner, setter])

    result = explore_interleavings(factory, preemption_bound=0,
                                   max_schedules=4)
    assert result.ok
    assert result.diverged >= 1  # the spinner-first schedule hit the cap


def test_stall_point_pauses_only_the_bound_thread():
    arr = AtomicWordArray(1)
    stall = StallPoint(stall_at=2)
    arr.hook = stall.hook
    # Unbound threads sail through the hook.
    arr.store(0, 5)
    arr.store(0, 6)
    assert arr.load(0) == 6

    def victim():
        stall.bind()
        arr.store(0, 7)
        arr.store(0, 8)  # parks right before this one

    t = threading.Thread(target=victim)
    t.start()
    assert stall.wait_until_stalled()
    assert arr.load(0) == 7
    stall.release()
    t.join()
    arr.hook = None
    assert arr.load(0) == 8


def test_exploration_report_shape():
    report = Exploration()
    assert report.ok
    report.failures.append(((0, 1), "AssertionError()"))
    assert not report.ok
