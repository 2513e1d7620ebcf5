"""Multi-word CAS protocol: packing, lifecycle, atomicity, helping."""

import threading

import pytest

from hopscotch.interleave import StallPoint
from hopscotch.kcas import (
    FAILED,
    K_MAX,
    SUCCEEDED,
    UNDECIDED,
    DEFAULT_DOMAIN,
    KcasDomain,
    acquire_descriptor,
    descriptor_reference,
    kcas_execute,
    kcas_read,
    pack_value,
    unpack_value,
)
from hopscotch.words import AtomicWordArray


def plain(*values):
    """Array whose words hold the given logical values."""
    arr = AtomicWordArray(len(values))
    for i, v in enumerate(values):
        arr.store(i, pack_value(v))
    return arr


# -- encodings ---------------------------------------------------------------

def test_value_packing_roundtrip():
    assert unpack_value(pack_value(0)) == 0
    top = (1 << 62) - 1
    assert unpack_value(pack_value(top)) == top


def test_pack_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        pack_value(1 << 62)
    with pytest.raises(ValueError):
        pack_value(-1)


def test_unpack_rejects_descriptor_references():
    with pytest.raises(ValueError):
        unpack_value(descriptor_reference(0, 1))


def test_reference_field_layout():
    ref = descriptor_reference(3, 9)
    assert ref & 0x3 == 0x1
    assert (ref >> 2) & 0xFFFF == 3
    assert ref >> 18 == 9


# -- descriptor lifecycle ----------------------------------------------------

def test_acquire_reuses_and_reincarnates():
    domain = KcasDomain()
    d1 = domain.acquire()
    seq = d1.sequence
    d1.add(plain(0), 0, 0, 1)
    d2 = domain.acquire()
    assert d2 is d1  # one descriptor per thread, reused
    assert d2.sequence == seq + 1
    assert d2.entries == ()
    assert d2.status() == (d2.sequence, UNDECIDED)


def test_thread_slots_are_stable_and_distinct():
    domain = KcasDomain()
    mine = domain.thread_slot()
    assert domain.thread_slot() == mine
    other = []
    t = threading.Thread(target=lambda: other.append(domain.thread_slot()))
    t.start()
    t.join()
    assert other[0] != mine


def test_add_validates_values_and_arity():
    domain = KcasDomain()
    arr = plain(*range(K_MAX + 1))
    desc = domain.acquire()
    with pytest.raises(ValueError):
        desc.add(arr, 0, 1 << 62, 0)
    for i in range(K_MAX):
        desc.add(arr, i, i, i + 1)
    with pytest.raises(ValueError):
        desc.add(arr, K_MAX, K_MAX, 0)


def test_execute_rejects_empty_and_duplicate_targets():
    domain = KcasDomain()
    with pytest.raises(ValueError):
        domain.execute(domain.acquire())
    desc = domain.acquire()
    arr = plain(0, 0)
    desc.add(arr, 0, 0, 1)
    desc.add(arr, 0, 0, 2)
    with pytest.raises(ValueError):
        domain.execute(desc)


# -- serial execution --------------------------------------------------------

def test_kcas_applies_all_or_nothing():
    domain = KcasDomain()
    arr = plain(5, 7)
    desc = domain.acquire()
    desc.add(arr, 0, 5, 6)
    desc.add(arr, 1, 7, 8)
    assert domain.execute(desc)
    assert desc.status() == (desc.sequence, SUCCEEDED)
    assert domain.read(arr, 0) == 6
    assert domain.read(arr, 1) == 8

    desc = domain.acquire()
    desc.add(arr, 0, 6, 60)
    desc.add(arr, 1, 999, 80)  # stale expectation
    assert not domain.execute(desc)
    assert desc.status() == (desc.sequence, FAILED)
    assert domain.read(arr, 0) == 6  # first word rolled back
    assert domain.read(arr, 1) == 8


def test_full_width_descriptor():
    domain = KcasDomain()
    arr = plain(*range(K_MAX))
    desc = domain.acquire()
    for i in range(K_MAX):
        desc.add(arr, i, i, i + 100)
    assert domain.execute(desc)
    assert [domain.read(arr, i) for i in range(K_MAX)] == [
        i + 100 for i in range(K_MAX)
    ]


def test_read_raw_returns_the_plain_word():
    domain = KcasDomain()
    arr = plain(5)
    assert domain.read_raw(arr, 0) == pack_value(5)


def test_default_domain_wrappers():
    arr = plain(1)
    desc = acquire_descriptor()
    desc.add(arr, 0, 1, 2)
    assert kcas_execute(desc)
    assert kcas_read(arr, 0) == 2
    assert DEFAULT_DOMAIN.read(arr, 0) == 2


def test_stale_reference_help_is_a_no_op():
    """A helper holding a reference to a reincarnated descriptor must leave."""
    domain = KcasDomain()
    arr = plain(5)
    desc = domain.acquire()
    seq = desc.sequence
    stale = descriptor_reference(desc.owner, seq)
    domain.acquire()  # reincarnate: the reference above is now dead
    domain._complete(stale, 0)
    assert domain.read(arr, 0) == 5
    assert desc.status() == (seq + 1, UNDECIDED)


# -- helping -----------------------------------------------------------------

def test_reader_helps_a_suspended_operation_to_completion():
    """A thread parked mid-install cannot block readers of its targets."""
    domain = KcasDomain()
    arr = plain(5, 7)
    stall = StallPoint(stall_at=2)  # park before the second install
    outcome = []

    def victim():
        stall.bind()
        desc = domain.acquire()
        desc.add(arr, 0, 5, 6)
        desc.add(arr, 1, 7, 8)
        outcome.append(domain.execute(desc))

    arr.hook = stall.hook
    t = threading.Thread(target=victim)
    t.start()
    assert stall.wait_until_stalled()
    # The reader observes the reference and finishes the whole operation.
    assert domain.read(arr, 0) == 6
    assert domain.read(arr, 1) == 8
    stall.release()
    t.join()
    arr.hook = None
    assert outcome == [True]  # the owner still reports its own success


# -- contention --------------------------------------------------------------

def test_opposite_declaration_orders_cannot_deadlock():
    """Targets are installed in one global order regardless of add() order."""
    domain = KcasDomain()
    a = plain(0)
    b = plain(0)
    rounds = 200
    barrier = threading.Barrier(2)

    def work(first, second):
        barrier.wait()
        done = 0
        while done < rounds:
            va = domain.read(a, 0)
            vb = domain.read(b, 0)
            desc = domain.acquire()
            if first is a:
                desc.add(first, 0, va, va + 1)
                desc.add(second, 0, vb, vb + 1)
            else:
                desc.add(first, 0, vb, vb + 1)
                desc.add(second, 0, va, va + 1)
            if domain.execute(desc):
                done += 1

    pool = [threading.Thread(target=work, args=(a, b)),
            threading.Thread(target=work, args=(b, a))]
    for t in pool:
        t.start()
    for t in pool:
        t.join(timeout=60)
        assert not t.is_alive()
    assert domain.read(a, 0) == 2 * rounds
    assert domain.read(b, 0) == 2 * rounds


def test_equal_pair_invariant_under_contention():
    """Both words move together; a stable read never sees them apart."""
    domain = KcasDomain()
    arr = plain(0, 0)
    per_writer = 500
    stop = threading.Event()
    problems = []
    barrier = threading.Barrier(3)

    def writer():
        barrier.wait()
        done = 0
        while done < per_writer:
            v = domain.read(arr, 0)
            desc = domain.acquire()
            desc.add(arr, 0, v, v + 1)
            desc.add(arr, 1, v, v + 1)
            if domain.execute(desc):
                done += 1

    def reader():
        barrier.wait()
        while not stop.is_set():
            first = domain.read(arr, 0)
            partner = domain.read(arr, 1)
            again = domain.read(arr, 0)
            if first == again and partner != first:
                problems.append((first, partner))
                return

    pool = [threading.Thread(target=writer) for _ in range(2)]
    pool.append(threading.Thread(target=reader))
    for t in pool:
        t.start()
    pool[0].join()
    pool[1].join()
    stop.set()
    pool[2].join()
    assert not problems
    assert domain.read(arr, 0) == 2 * per_writer
    assert domain.read(arr, 1) == 2 * per_writer


def test_read_rejects_unknown_tags():
    # Only tags 00 (plain) and 01 (descriptor) are ever written; anything
    # else is a word that bypassed pack_value and must not spin forever.
    domain = KcasDomain()
    for tag in (0x2, 0x3):
        arr = AtomicWordArray(1, fill=tag)
        with pytest.raises(ValueError):
            domain.read(arr, 0)
        with pytest.raises(ValueError):
            domain.read_raw(arr, 0)
