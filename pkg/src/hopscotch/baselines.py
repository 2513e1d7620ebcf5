"""Reference implementations: a lock-striped hopscotch set and a serial oracle.

``LockedHopscotchSet`` is the comparison baseline: same bucket layout, same
neighborhood discipline, but mutations run under segment locks instead of
CAS protocols. The table is split into contiguous bucket ranges, one lock
per range, with the lock count the next power of two at or above the
expected concurrency. Membership reads stay lock-free and validate against
per-segment modification stamps.

An insert may displace entries across several segments; it acquires, in
ascending order, every segment its plan touches, and re-plans whenever the
plan grew past the held set. Lock sets only ever grow within one attempt, so
two inserts cannot deadlock.

``OracleSet`` is the plain serial model the concurrent tables are judged
against.
"""

import threading
from array import array

from .core import (EMPTY, MEMBER, NIL_KEY, BucketView, TableConfig,
                   TableSaturated, _mix64, _GOLDEN)


class LockedHopscotchSet:
    """Segment-locked hopscotch set over non-zero 64-bit integer keys."""

    def __init__(self, config: TableConfig, concurrency: int = 8):
        self.config = config
        n = config.capacity
        segments = 1
        while segments < concurrency:
            segments <<= 1
        segments = min(segments, n)
        self._keys = array("Q", [0]) * n
        self._bm = [0] * n
        self._locks = tuple(threading.Lock() for _ in range(segments))
        self._stamps = [0] * segments
        self._seg_shift = (n.bit_length() - 1) - (segments.bit_length() - 1)
        self._mask = n - 1
        self._h = config.neighborhood
        self._maxd = config.max_distance
        self._hash_seed = _mix64(config.seed ^ _GOLDEN)

    def home_of(self, key: int) -> int:
        return _mix64(key ^ self._hash_seed) & self._mask

    def _segment(self, bucket: int) -> int:
        return bucket >> self._seg_shift

    # -- membership (lock-free, stamp-validated) --------------------------

    def contains(self, key: int) -> bool:
        if key == NIL_KEY:
            raise ValueError("key 0 is reserved as the empty slot marker")
        home = self.home_of(key)
        keys = self._keys
        mask = self._mask
        stamps = self._stamps
        seg = self._segment(home)
        stamp_before = stamps[seg]
        while True:
            bits = self._bm[home]
            while bits:
                low = bits & -bits
                bits ^= low
                if keys[(home + low.bit_length() - 1) & mask] == key:
                    return True
            stamp_after = stamps[seg]
            if stamp_after == stamp_before:
                return False
            stamp_before = stamp_after

    __contains__ = contains

    # -- mutation ----------------------------------------------------------

    def add(self, key: int) -> bool:
        if key == NIL_KEY:
            raise ValueError("key 0 is reserved as the empty slot marker")
        home = self.home_of(key)
        needed = {self._segment(home)}
        locks = self._locks
        while True:
            held = sorted(needed)
            for s in held:
                locks[s].acquire()
            try:
                if self._find_locked(home, key) >= 0:
                    return False
                slot, moves = self._plan_insert(home)
                segs = {self._segment(home), self._segment(slot)}
                for src, dst, cb, _, _ in moves:
                    segs.add(self._segment(src))
                    segs.add(self._segment(dst))
                    segs.add(self._segment(cb))
                if not segs <= needed:
                    # Plan reaches outside the held segments; widen and retry
                    # so every bucket the plan reads or writes is stable.
                    needed |= segs
                    continue
                self._apply_insert(home, key, slot, moves)
                return True
            finally:
                for s in reversed(held):
                    locks[s].release()

    def remove(self, key: int) -> bool:
        if key == NIL_KEY:
            raise ValueError("key 0 is reserved as the empty slot marker")
        home = self.home_of(key)
        seg = self._segment(home)
        with self._locks[seg]:
            j = self._find_locked(home, key)
            if j < 0:
                return False
            # Stamp first: a reader that catches the key wipe must also
            # catch the bump, or it could report a false miss.
            self._stamps[seg] += 1
            self._keys[j] = NIL_KEY
            self._bm[home] &= ~(1 << ((j - home) & self._mask))
            return True

    def _find_locked(self, home: int, key: int) -> int:
        """Bucket of ``key`` under the home segment lock, or -1.

        Holding the home segment serialises every mutation of home's
        entries, so the reads are stable even when the advertised buckets
        lie in other segments.
        """
        keys = self._keys
        mask = self._mask
        bits = self._bm[home]
        while bits:
            low = bits & -bits
            bits ^= low
            j = (home + low.bit_length() - 1) & mask
            if keys[j] == key:
                return j
        return -1

    def _plan_insert(self, home: int):
        """Probe for an empty slot and the displacement chain to pull it in.

        Pure reads; the caller applies the plan only once every touched
        segment is locked.
        """
        keys = self._keys
        mask = self._mask
        slot = -1
        for offset in range(self._maxd):
            j = (home + offset) & mask
            if keys[j] == NIL_KEY:
                slot = j
                break
        if slot < 0:
            raise TableSaturated(
                f"no empty bucket within {self._maxd} of home {home}"
            )
        moves = []
        while ((slot - home) & mask) >= self._h:
            moved = False
            for dist in range(self._h - 1, 0, -1):
                cb = (slot - dist) & mask
                candidates = self._bm[cb] & ((1 << dist) - 1)
                if not candidates:
                    continue
                low = candidates & -candidates
                lsb = low.bit_length() - 1
                src = (cb + lsb) & mask
                moves.append((src, slot, cb, lsb, dist))
                slot = src
                moved = True
                break
            if not moved:
                raise TableSaturated(
                    f"no displacement candidate for bucket {slot} "
                    f"(home {home})"
                )
        return slot, moves

    def _apply_insert(self, home, key, slot, moves):
        keys = self._keys
        bm = self._bm
        stamps = self._stamps
        for src, dst, cb, bit_src, bit_dst in moves:
            keys[dst] = keys[src]
            # One store flips both bits, so lock-free readers see the entry
            # at the old bucket or the new one, never neither.
            bm[cb] = (bm[cb] | (1 << bit_dst)) & ~(1 << bit_src)
            stamps[self._segment(cb)] += 1
            keys[src] = NIL_KEY
        keys[slot] = key
        bm[home] |= 1 << ((slot - home) & self._mask)

    # -- introspection (quiescent) ----------------------------------------

    def snapshot(self) -> list[BucketView]:
        out = []
        for i in range(self.config.capacity):
            key = self._keys[i]
            state = MEMBER if key != NIL_KEY else EMPTY
            out.append(BucketView(i, key, 0, state, self._bm[i], 0))
        return out

    def member_keys(self) -> list[int]:
        return [k for k in self._keys if k != NIL_KEY]

    def __len__(self) -> int:
        return len(self.member_keys())

    def __iter__(self):
        return iter(self.member_keys())

    @property
    def capacity(self) -> int:
        return self.config.capacity

    @property
    def neighborhood(self) -> int:
        return self._h

    @property
    def lock_count(self) -> int:
        return len(self._locks)


class OracleSet:
    """Serial model: a plain set behind the same operation signatures."""

    def __init__(self):
        self._members = set()

    def contains(self, key: int) -> bool:
        return key in self._members

    __contains__ = contains

    def add(self, key: int) -> bool:
        if key in self._members:
            return False
        self._members.add(key)
        return True

    def remove(self, key: int) -> bool:
        if key not in self._members:
            return False
        self._members.discard(key)
        return True

    def apply(self, kind: str, key: int) -> bool:
        return getattr(self, kind)(key)

    def member_keys(self) -> list[int]:
        return sorted(self._members)

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self):
        return iter(sorted(self._members))
