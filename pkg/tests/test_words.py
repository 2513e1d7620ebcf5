"""Atomic word array semantics, serial and under thread contention."""

import threading

import pytest

from hopscotch.words import WORD_MASK, AtomicWordArray


def test_construction_and_fill():
    arr = AtomicWordArray(4, fill=7)
    assert len(arr) == 4
    assert arr.snapshot() == [7, 7, 7, 7]


def test_single_stripe_still_works():
    arr = AtomicWordArray(4, stripes=1)
    assert arr.cas(3, 0, 11)
    assert arr.load(3) == 11


def test_length_must_be_positive():
    with pytest.raises(ValueError):
        AtomicWordArray(0)


def test_values_are_masked_to_64_bits():
    arr = AtomicWordArray(2, fill=-1)
    assert arr.load(0) == WORD_MASK
    arr.store(0, (1 << 64) + 5)
    assert arr.load(0) == 5


def test_cas_success_and_failure():
    arr = AtomicWordArray(1, fill=10)
    assert arr.cas(0, 10, 20)
    assert arr.load(0) == 20
    assert not arr.cas(0, 10, 30)
    assert arr.load(0) == 20


def test_fetch_or_returns_the_previous_value():
    arr = AtomicWordArray(1, fill=0b0101)
    assert arr.fetch_or(0, 0b0011) == 0b0101
    assert arr.load(0) == 0b0111


def test_fetch_xor_returns_the_previous_value():
    arr = AtomicWordArray(1, fill=0b0101)
    assert arr.fetch_xor(0, 0b0011) == 0b0101
    assert arr.load(0) == 0b0110


def test_guarded_swap_needs_both_comparisons():
    target = AtomicWordArray(1, fill=1)
    guard = AtomicWordArray(1, fill=5)

    assert target.cas_guarded(0, 2, 9, guard, 0, 5) == (1, False)
    assert target.load(0) == 1  # target mismatch: no write

    assert target.cas_guarded(0, 1, 9, guard, 0, 6) == (1, False)
    assert target.load(0) == 1  # guard mismatch: no write

    assert target.cas_guarded(0, 1, 9, guard, 0, 5) == (1, True)
    assert target.load(0) == 9

    # The previous value distinguishes "already done" from interference.
    assert target.cas_guarded(0, 1, 9, guard, 0, 5) == (9, False)


def test_snapshot_is_a_copy():
    arr = AtomicWordArray(2, fill=3)
    snap = arr.snapshot()
    snap[0] = 99
    assert arr.load(0) == 3


def test_hook_fires_before_every_primitive():
    arr = AtomicWordArray(2)
    guard = AtomicWordArray(1)
    seen = []
    arr.hook = lambda op, words, index: seen.append((op, words is arr, index))
    arr.load(0)
    arr.store(1, 4)
    arr.cas(1, 4, 5)
    arr.fetch_or(0, 1)
    arr.fetch_xor(0, 1)
    arr.cas_guarded(1, 5, 6, guard, 0, 0)
    arr.hook = None
    arr.load(0)  # unhooked: not recorded
    assert seen == [
        ("load", True, 0),
        ("store", True, 1),
        ("cas", True, 1),
        ("fetch_or", True, 0),
        ("fetch_xor", True, 0),
        ("cas_guarded", True, 1),
    ]


def test_hook_runs_outside_the_stripe_lock():
    """A hook may itself touch the same word without deadlocking."""
    arr = AtomicWordArray(1, stripes=1)
    fired = []

    def hook(op, words, index):
        if not fired:
            fired.append(op)
            arr.store(index, 77)

    arr.hook = hook
    arr.store(0, 1)  # hook's store lands first, then this one
    assert arr.load(0) == 1
    assert fired == ["store"]


def test_concurrent_cas_increments_lose_nothing():
    arr = AtomicWordArray(1)
    threads = 4
    per_thread = 2000
    barrier = threading.Barrier(threads)

    def work():
        barrier.wait()
        for _ in range(per_thread):
            while True:
                old = arr.load(0)
                if arr.cas(0, old, old + 1):
                    break

    pool = [threading.Thread(target=work) for _ in range(threads)]
    for t in pool:
        t.start()
    for t in pool:
        t.join()
    assert arr.load(0) == threads * per_thread


def test_concurrent_bit_flips_stay_per_bit():
    """Each thread toggles only its own bit; an even count restores zero."""
    arr = AtomicWordArray(1)
    threads = 8
    barrier = threading.Barrier(threads)

    def work(bit):
        barrier.wait()
        for _ in range(500):
            arr.fetch_or(0, 1 << bit)
            arr.fetch_xor(0, 1 << bit)

    pool = [threading.Thread(target=work, args=(i,)) for i in range(threads)]
    for t in pool:
        t.start()
    for t in pool:
        t.join()
    assert arr.load(0) == 0
