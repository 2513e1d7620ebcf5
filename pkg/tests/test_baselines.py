"""The segment-locked baseline table and the serial oracle."""

import random
import threading

import pytest

from hopscotch.baselines import LockedHopscotchSet, OracleSet
from hopscotch.checker import (
    colliding_keys,
    ledger_violations,
    random_scripts,
    run_recorded,
    structural_audit,
    tight_switch_interval,
)
from hopscotch.core import NIL_KEY, TableConfig, TableSaturated


def locked_table(capacity_log2=6, **kwargs):
    return LockedHopscotchSet(TableConfig.sized(capacity_log2), **kwargs)


def test_lock_count_rounds_up_to_a_power_of_two():
    assert locked_table(concurrency=8).lock_count == 8
    assert locked_table(concurrency=5).lock_count == 8
    assert locked_table(concurrency=1).lock_count == 1
    # Never more locks than buckets.
    assert locked_table(capacity_log2=2, concurrency=64).lock_count == 4


def test_roundtrip_and_duplicates():
    table = locked_table()
    assert table.add(5)
    assert not table.add(5)
    assert table.contains(5)
    assert 5 in table
    assert table.remove(5)
    assert not table.remove(5)
    assert not table.contains(5)


def test_key_zero_is_reserved():
    table = locked_table()
    for op in (table.add, table.remove, table.contains):
        with pytest.raises(ValueError):
            op(NIL_KEY)


def test_displacement_keeps_everyone_reachable():
    table = locked_table(capacity_log2=4)
    home = 3
    mine = colliding_keys(table, home, 4)
    blocker = colliding_keys(table, home + 3, 1)[0]
    for k in mine[:3]:
        assert table.add(k)
    assert table.add(blocker)
    assert table.add(mine[3])  # forces the blocker to hop forward
    for k in mine + [blocker]:
        assert table.contains(k)
    report = structural_audit(table)
    assert report.ok, report.text()


def test_saturation_raises():
    table = LockedHopscotchSet(
        TableConfig(capacity=8, neighborhood=4, max_distance=8)
    )
    added = 0
    with pytest.raises(TableSaturated):
        for key in range(1, 100):
            table.add(key)
            added += 1
    assert added == 8


def test_oracle_replay():
    table = locked_table(capacity_log2=9)
    oracle = OracleSet()
    rng = random.Random(77)
    for _ in range(20_000):
        key = rng.randrange(1, 200)
        kind = rng.choice(("add", "add", "remove", "remove", "contains"))
        assert getattr(table, kind)(key) == oracle.apply(kind, key)
    assert sorted(table) == oracle.member_keys()
    report = structural_audit(table)
    assert report.ok, report.text()


def test_concurrent_mixed_workload_passes_audits():
    table = locked_table(capacity_log2=9)
    scripts = random_scripts(threads=4, ops_per_thread=5_000,
                             keys=range(1, 129), seed=5, update_weight=0.5)
    with tight_switch_interval():
        history = run_recorded(table, scripts)
    problems = ledger_violations(history, set(table.member_keys()))
    assert problems == [], problems[:5]
    report = structural_audit(table)
    assert report.ok, report.text()


def test_reads_survive_neighborhood_churn():
    """The stamp-validated read path never misses a stable member."""
    table = locked_table(capacity_log2=6)
    home = 9
    stable, *churn = colliding_keys(table, home, 5)
    assert table.add(stable)
    stop = threading.Event()
    misses = []

    def reader():
        while not stop.is_set():
            if not table.contains(stable):
                misses.append(True)
                return

    def writer():
        rng = random.Random(3)
        for _ in range(4_000):
            key = rng.choice(churn)
            if not table.add(key):
                table.remove(key)

    with tight_switch_interval():
        r = threading.Thread(target=reader)
        w = threading.Thread(target=writer)
        r.start()
        w.start()
        w.join()
        stop.set()
        r.join()
    assert not misses
    assert table.contains(stable)


def test_oracle_set_api():
    oracle = OracleSet()
    assert oracle.apply("add", 3)
    assert not oracle.apply("add", 3)
    assert oracle.apply("contains", 3)
    assert 3 in oracle
    assert len(oracle) == 1
    assert list(oracle) == [3]
    assert oracle.apply("remove", 3)
    assert not oracle.apply("remove", 3)
    assert oracle.member_keys() == []
