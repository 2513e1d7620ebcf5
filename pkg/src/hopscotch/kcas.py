"""Multi-word compare-and-swap (K-CAS) over :class:`AtomicWordArray` words.

A word managed by this module carries a 2-bit tag in its low bits. Tag 0 is a
plain value, whose logical 62-bit payload sits in the upper bits. Tag 1 is a
reference to an in-flight operation's descriptor, encoded as an owner slot
plus a sequence number. A thread that finds a reference helps the owning
operation to completion and retries its own step, so no thread ever waits on
another.

Descriptors are single-writer and reused. Acquiring one bumps its sequence
number, which retroactively invalidates every reference a slow helper may
still hold from the previous incarnation: helpers re-validate the sequence
before and after reading descriptor fields and abandon on mismatch. The
status word embeds the sequence, and reference installation is a
double-compare single-swap gated on status still being (sequence, UNDECIDED),
so a stale helper can never decide a finished operation or plant a dead
reference in memory. An owner finishes detaching its references before
returning, so no reference outlives its incarnation.

The operation itself is the classic two-phase protocol: install references
into every target word in a global order (address order here), decide
SUCCEEDED once all are in or FAILED on the first plain mismatch, then replace
each reference with the new or the old value according to the decision.
"""

import threading
from typing import NamedTuple

from .words import AtomicWordArray

VALUE_BITS = 62
VALUE_MASK = (1 << VALUE_BITS) - 1

TAG_MASK = 0x3
TAG_DESCRIPTOR = 0x1

_OWNER_BITS = 16
_OWNER_MASK = (1 << _OWNER_BITS) - 1
_SEQ_SHIFT = 2 + _OWNER_BITS
_SEQ_MASK = (1 << (64 - _SEQ_SHIFT)) - 1

UNDECIDED = 0
SUCCEEDED = 1
FAILED = 2

K_MAX = 8

_HELP_DEPTH_LIMIT = 64


def pack_value(value: int) -> int:
    """Encode a logical value as a plain (tag 0) word."""
    if not 0 <= value <= VALUE_MASK:
        raise ValueError("logical values are limited to 62 bits")
    return value << 2


def unpack_value(raw: int) -> int:
    if raw & TAG_MASK:
        raise ValueError("word holds a descriptor reference, not a value")
    return raw >> 2


def descriptor_reference(owner: int, sequence: int) -> int:
    return TAG_DESCRIPTOR | (owner << 2) | ((sequence & _SEQ_MASK) << _SEQ_SHIFT)


class KcasEntry(NamedTuple):
    words: AtomicWordArray
    index: int
    expected: int
    new: int


class KcasDescriptor:
    """One thread's reusable K-CAS operation record."""

    __slots__ = ("owner", "sequence", "entries", "_building", "_status")

    def __init__(self, owner: int):
        self.owner = owner
        self.sequence = 0
        # Helpers iterate `entries`; it is only ever rebound to fresh tuples,
        # never mutated, so a stale helper sees a coherent (old) snapshot.
        self.entries: tuple[KcasEntry, ...] = ()
        self._building: list[KcasEntry] = []
        self._status = AtomicWordArray(1)

    def add(self, words: AtomicWordArray, index: int, expected: int, new: int) -> None:
        """Queue one word update (logical values) for the next execute."""
        if not 0 <= expected <= VALUE_MASK or not 0 <= new <= VALUE_MASK:
            raise ValueError("logical values are limited to 62 bits")
        if len(self._building) >= K_MAX:
            raise ValueError(f"descriptor holds at most {K_MAX} entries")
        self._building.append(KcasEntry(words, index, expected << 2, new << 2))

    def status(self) -> tuple[int, int]:
        """(sequence, code) currently packed in the status word."""
        raw = self._status.load(0)
        return raw >> 2, raw & TAG_MASK


class KcasDomain:
    """Registry tying descriptor references back to descriptors.

    Tables may share a domain freely; tests use private domains for
    isolation. Thread slots are assigned on first use and stay stable for
    the thread's lifetime.
    """

    def __init__(self):
        self._descriptors: dict[int, KcasDescriptor] = {}
        self._slots: dict[int, int] = {}
        self._registry_lock = threading.Lock()

    def thread_slot(self) -> int:
        ident = threading.get_ident()
        slot = self._slots.get(ident)
        if slot is None:
            with self._registry_lock:
                slot = self._slots.get(ident)
                if slot is None:
                    slot = len(self._slots)
                    if slot > _OWNER_MASK:
                        raise RuntimeError("owner slots exhausted")
                    self._slots[ident] = slot
        return slot

    def acquire(self, owner: int | None = None) -> KcasDescriptor:
        """Fresh incarnation of the calling thread's descriptor.

        Bumping the sequence first and only then resetting status means a
        helper that loses the race sees either the old status (whose embedded
        sequence its CASes expect, now unmatchable) or a sequence mismatch.
        """
        if owner is None:
            owner = self.thread_slot()
        desc = self._descriptors.get(owner)
        if desc is None:
            with self._registry_lock:
                desc = self._descriptors.setdefault(owner, KcasDescriptor(owner))
        desc.sequence += 1
        desc.entries = ()
        desc._building = []
        desc._status.store(0, ((desc.sequence & _SEQ_MASK) << 2) | UNDECIDED)
        return desc

    def read(self, words: AtomicWordArray, index: int) -> int:
        """Logical value of a word, helping any in-flight operation first."""
        while True:
            raw = words.load(index)
            if not raw & TAG_MASK:
                return raw >> 2
            if raw & TAG_MASK != TAG_DESCRIPTOR:
                raise ValueError(f"word carries unknown tag {raw & TAG_MASK}; "
                                 "was it written without pack_value?")
            self._complete(raw, 0)

    def read_raw(self, words: AtomicWordArray, index: int) -> int:
        """Plain (tag 0) raw word, helping until one is observed."""
        while True:
            raw = words.load(index)
            if not raw & TAG_MASK:
                return raw
            if raw & TAG_MASK != TAG_DESCRIPTOR:
                raise ValueError(f"word carries unknown tag {raw & TAG_MASK}; "
                                 "was it written without pack_value?")
            self._complete(raw, 0)

    def execute(self, desc: KcasDescriptor) -> bool:
        """Apply the queued updates atomically; True iff all matched."""
        entries = desc._building
        if not entries:
            raise ValueError("descriptor has no entries")
        seen = set()
        for entry in entries:
            loc = (id(entry.words), entry.index)
            if loc in seen:
                raise ValueError("duplicate target word in one descriptor")
            seen.add(loc)
        # Global install order keeps helping chains acyclic.
        entries.sort(key=lambda e: (id(e.words), e.index))
        desc.entries = tuple(entries)
        desc._building = []
        seq = desc.sequence & _SEQ_MASK
        self._complete(descriptor_reference(desc.owner, seq), 0)
        raw = desc._status.load(0)
        assert raw >> 2 == seq, "owner's descriptor reused while executing"
        return raw & TAG_MASK == SUCCEEDED

    def _complete(self, ref: int, depth: int) -> None:
        """Drive the operation behind ``ref`` to completion (owner or helper).

        Safe against staleness: every effectful step is conditioned on the
        status word still carrying the sequence baked into ``ref``.
        """
        if depth > _HELP_DEPTH_LIMIT:
            raise RuntimeError("helping depth exceeded; cyclic descriptors?")
        owner = (ref >> 2) & _OWNER_MASK
        seq = ref >> _SEQ_SHIFT
        desc = self._descriptors.get(owner)
        if desc is None:
            return
        if desc.sequence & _SEQ_MASK != seq:
            return
        entries = desc.entries
        if desc.sequence & _SEQ_MASK != seq:
            return
        status = desc._status
        undecided = (seq << 2) | UNDECIDED
        raw = status.load(0)
        if raw >> 2 != seq:
            return
        if raw & TAG_MASK == UNDECIDED:
            decided = False
            failed = False
            for words, index, expected, _ in entries:
                while True:
                    if status.load(0) != undecided:
                        decided = True
                        break
                    prev, wrote = words.cas_guarded(
                        index, expected, ref, status, 0, undecided
                    )
                    if wrote or prev == ref:
                        break
                    if prev & TAG_MASK:
                        self._complete(prev, depth + 1)
                        continue
                    failed = True
                    break
                if decided or failed:
                    break
            if failed:
                status.cas(0, undecided, (seq << 2) | FAILED)
            elif not decided:
                status.cas(0, undecided, (seq << 2) | SUCCEEDED)
        raw = status.load(0)
        if raw >> 2 != seq:
            return
        succeeded = raw & TAG_MASK == SUCCEEDED
        # Resolution: swap every reference for its final value. CAS, not
        # store: the word may already hold a newer plain value.
        for words, index, expected, new in entries:
            words.cas(index, ref, new if succeeded else expected)


DEFAULT_DOMAIN = KcasDomain()


def acquire_descriptor(owner: int | None = None) -> KcasDescriptor:
    return DEFAULT_DOMAIN.acquire(owner)


def kcas_read(words: AtomicWordArray, index: int) -> int:
    return DEFAULT_DOMAIN.read(words, index)


def kcas_execute(desc: KcasDescriptor) -> bool:
    return DEFAULT_DOMAIN.execute(desc)
