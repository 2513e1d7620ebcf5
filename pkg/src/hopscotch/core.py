"""Lock-free hopscotch hashing concurrent set.

Each bucket is three shared 64-bit words plus a key slot:

* ``vs``  packed (version, state). States: Empty, Busy, Collided, Visible,
  Inserting, Member. Busy marks a bucket claimed for exclusive use by one
  inserter; Inserting is the published-but-not-yet-committed phase of the
  uniqueness protocol; Collided marks an insertion killed by a duplicate.
  Visible exists in the encoding but is never entered here: entries become
  logically present only on the Inserting -> Member commit.
* ``bm``  neighborhood bitmap. Bit ``d`` of ``bm[h]`` advertises that bucket
  ``(h + d) mod capacity`` holds (or is about to hold) an entry whose key
  hashes home to ``h``. Readers only ever examine buckets their home bitmap
  points at, so membership never depends on probing.
* ``rc``  relocation count. Incremented by every displacement out of the
  bucket's neighborhood scan range; readers sample it before and after a
  scan and retry on change, which makes a negative scan of a moving
  neighborhood sound.

``vs`` and ``rc`` participate in multi-word CAS during displacement; ``bm``
words are plain atomic words driven by fetch_or / fetch_xor and never hold
descriptor references. Key slots are written only by the bucket's claimant
between Empty -> Busy and the next publish, so readers validate every key
read by re-reading the packed state word afterwards.

Versions exist to cut ABA ties: they bump on claim (Empty -> Busy), on
publish (Busy -> Inserting), and on release back to Empty, so no two
occupancies of a bucket ever share a version. Displacement deliberately
preserves versions; an entry keeps its identity while it moves.
"""

from dataclasses import dataclass

from .kcas import DEFAULT_DOMAIN, KcasDomain
from .words import AtomicWordArray

EMPTY = 0
BUSY = 1
COLLIDED = 2
VISIBLE = 3
INSERTING = 4
MEMBER = 5

STATE_NAMES = ("Empty", "Busy", "Collided", "Visible", "Inserting", "Member")

NIL_KEY = 0

_STATE_MASK = 0x7

_MIX_1 = 0xFF51AFD7ED558CCD
_MIX_2 = 0xC4CEB9FE1A85EC53
_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def pack_bucket_word(version: int, state: int) -> int:
    """Logical vs word: version in the high bits, state in the low three."""
    return (version << 3) | state


def bucket_state(word: int) -> int:
    return word & _STATE_MASK

def bucket_version(word: int) -> int:
    return word >> 3


def _mix64(x: int) -> int:
    x &= _MASK64
    x ^= x >> 33
    x = (x * _MIX_1) & _MASK64
    x ^= x >> 33
    x = (x * _MIX_2) & _MASK64
    x ^= x >> 33
    return x


class TableSaturated(RuntimeError):
    """No usable bucket within the probe limit; resizing is out of scope."""


@dataclass(frozen=True)
class TableConfig:
    """Shape parameters for a table.

    capacity      power-of-two bucket count (fixed; no resizing)
    neighborhood  H, how far an entry may sit from its home bucket; also the
                  usable width of each bitmap word, so at most 64
    max_distance  claim probe limit: an insert may initially claim a bucket
                  up to this far from home before displacing inward
    seed          hash seed; distinct seeds give distinct home mappings
    prescan       look the key up before claiming a bucket on add
    """

    capacity: int
    neighborhood: int = 64
    max_distance: int = 512
    seed: int = 0
    prescan: bool = True

    def __post_init__(self):
        if self.capacity < 2 or self.capacity & (self.capacity - 1):
            raise ValueError("capacity must be a power of two >= 2")
        if not 1 <= self.neighborhood <= 64:
            raise ValueError("neighborhood must be in 1..64")
        if self.neighborhood > self.capacity:
            raise ValueError("neighborhood cannot exceed capacity")
        if not self.neighborhood <= self.max_distance <= self.capacity:
            raise ValueError("max_distance must be in neighborhood..capacity")

    @classmethod
    def sized(cls, capacity_log2: int, **overrides) -> "TableConfig":
        """Config for a 2**capacity_log2 table with defaults clamped to fit."""
        capacity = 1 << capacity_log2
        fields = {
            "capacity": capacity,
            "neighborhood": min(64, capacity),
            "max_distance": min(512, capacity),
        }
        fields.update(overrides)
        return cls(**fields)


class BucketView:
    """Read-only snapshot of one bucket, for audits and debugging."""

    __slots__ = ("index", "key", "version", "state", "bitmap", "relocations")

    def __init__(self, index, key, version, state, bitmap, relocations):
        self.index = index
        self.key = key
        self.version = version
        self.state = state
        self.bitmap = bitmap
        self.relocations = relocations

    def __repr__(self):
        return (
            f"BucketView(index={self.index}, key={self.key}, "
            f"version={self.version}, state={STATE_NAMES[self.state]}, "
            f"bitmap={self.bitmap:#x}, relocations={self.relocations})"
        )


class LockFreeHopscotchSet:
    """Concurrent set of non-zero 64-bit integer keys.

    All operations are lock-free: a suspended thread can leave at most one
    bucket Busy and one multi-word CAS in flight, neither of which stops
    other keys' operations, and any thread can help an in-flight
    displacement to completion.
    """

    __slots__ = ("config", "_vs", "_rc", "_bm", "_keys", "_mask", "_h",
                 "_maxd", "_prescan", "_hash_seed", "_kcas")

    def __init__(self, config: TableConfig, kcas_domain: KcasDomain | None = None):
        self.config = config
        n = config.capacity
        self._vs = AtomicWordArray(n)
        self._rc = AtomicWordArray(n)
        self._bm = AtomicWordArray(n)
        self._keys = AtomicWordArray(n)
        self._mask = n - 1
        self._h = config.neighborhood
        self._maxd = config.max_distance
        self._prescan = config.prescan
        self._hash_seed = _mix64(config.seed ^ _GOLDEN)
        self._kcas = kcas_domain if kcas_domain is not None else DEFAULT_DOMAIN

    # -- hashing ---------------------------------------------------------

    def home_of(self, key: int) -> int:
        """Home bucket of a key; every placement is measured from here."""
        # _mix64 inlined; this sits on every operation's critical path.
        x = (key ^ self._hash_seed) & _MASK64
        x ^= x >> 33
        x = x * _MIX_1 & _MASK64
        x ^= x >> 33
        x = x * _MIX_2 & _MASK64
        return (x ^ (x >> 33)) & self._mask

    # -- word access -----------------------------------------------------

    def _vs_read(self, i: int) -> int:
        raw = self._vs.load(i)
        if raw & 0x3:
            raw = self._kcas.read_raw(self._vs, i)
        return raw >> 2

    def _rc_read(self, i: int) -> int:
        raw = self._rc.load(i)
        if raw & 0x3:
            raw = self._kcas.read_raw(self._rc, i)
        return raw >> 2

    def _vs_cas(self, i: int, expected: int, new: int) -> bool:
        return self._vs.cas(i, expected << 2, new << 2)

    def _vs_store(self, i: int, word: int) -> None:
        self._vs.store(i, word << 2)

    # -- membership ------------------------------------------------------

    def contains(self, key: int) -> bool:
        """True iff ``key`` is a member at some instant during the call."""
        if key == NIL_KEY:
            raise ValueError("key 0 is reserved as the empty slot marker")
        return self._scan_for(self.home_of(key), key)

    __contains__ = contains

    def _scan_for(self, home: int, key: int) -> bool:
        """Search home's advertised buckets; retry negatives on relocation.

        A hit needs no counter check: the key was a Member at the moment the
        validated read happened. A miss is only believable if no entry moved
        through the neighborhood while we scanned. Word reads and their
        descriptor-tag checks are inlined; this loop dominates every
        operation's cost.
        """
        vs = self._vs
        rc = self._rc
        bm = self._bm
        keys = self._keys
        # Hooks are installed only at quiescence, so one check per call is
        # enough to take the frame-free load path.
        vs_load = vs._words.__getitem__ if vs.hook is None else vs.load
        rc_load = rc._words.__getitem__ if rc.hook is None else rc.load
        bm_load = bm._words.__getitem__ if bm.hook is None else bm.load
        keys_load = keys._words.__getitem__ if keys.hook is None else keys.load
        read_raw = self._kcas.read_raw
        mask = self._mask
        raw = rc_load(home)
        rc_before = (raw if not raw & 0x3 else read_raw(rc, home)) >> 2
        while True:
            bits = bm_load(home)
            while bits:
                low = bits & -bits
                bits ^= low
                j = (home + low.bit_length() - 1) & mask
                while True:
                    raw = vs_load(j)
                    word = (raw if not raw & 0x3 else read_raw(vs, j)) >> 2
                    if word & _STATE_MASK != MEMBER:
                        break
                    k = keys_load(j)
                    raw = vs_load(j)
                    if (raw if not raw & 0x3 else read_raw(vs, j)) >> 2 != word:
                        continue  # bucket changed under the key read
                    if k == key:
                        return True
                    break
            raw = rc_load(home)
            rc_after = (raw if not raw & 0x3 else read_raw(rc, home)) >> 2
            if rc_after == rc_before:
                return False
            rc_before = rc_after

    # -- insertion -------------------------------------------------------

    def add(self, key: int) -> bool:
        """Insert ``key``; False if already present.

        Claims the nearest Empty bucket within ``max_distance``, displaces
        it to within the neighborhood if needed, publishes the key as
        Inserting, and commits through the uniqueness check. An insertion
        beaten by a concurrent duplicate restarts from scratch: only an
        observed Member duplicate can justify returning False, since a
        still-Inserting winner may not have committed when we respond.

        TableSaturated is reserved for a validated dead end: every bucket
        blocking the insert holds a committed member that cannot legally
        move. A dead end caused by someone else's in-flight operation is
        transient, so the add restarts instead.
        """
        if key == NIL_KEY:
            raise ValueError("key 0 is reserved as the empty slot marker")
        home = self.home_of(key)
        while True:
            if self._prescan and self._scan_for(home, key):
                return False
            try:
                claim = self._claim_bucket(home)
            except TableSaturated:
                # A member-packed probe can still contain the key itself.
                genuine, present = self._validate_dead_end(
                    key, (home + self._maxd) & self._mask, self._maxd,
                    check_window=False)
                if present:
                    return False
                if genuine:
                    raise
                continue
            if claim is None:
                continue  # the probe crossed someone mid-operation
            rb, offset, version = claim
            dead_end = False
            while offset >= self._h:
                nrb, noffset, nversion = self._find_closer(rb, offset, version)
                if nrb == rb:
                    # Nothing in front can move. Give the claim back first so
                    # the table stays clean whichever way this resolves.
                    self._keys.store(rb, NIL_KEY)
                    self._vs_store(rb, ((version + 1) << 3) | EMPTY)
                    genuine, present = self._validate_dead_end(
                        key, rb, offset, claim_version=version)
                    if present:
                        return False  # a duplicate committed after the scan
                    if genuine:
                        raise TableSaturated(
                            f"no displacement candidate for bucket {rb} "
                            f"(offset {offset} from home {home})"
                        )
                    dead_end = True  # transient blockage; take it from the top
                    break
                rb, offset, version = nrb, noffset, nversion
            if dead_end:
                continue
            self._keys.store(rb, key)
            version += 1  # new occupancy, new identity
            self._vs_store(rb, (version << 3) | INSERTING)
            self._bm.fetch_or(home, 1 << offset)
            outcome = self._uniqueness_commit(rb, home, offset, version, key)
            if outcome is not None:
                return outcome

    def _claim_bucket(self, home: int) -> tuple[int, int, int] | None:
        """CAS the nearest Empty bucket to Busy; (bucket, offset, version).

        None means the probe found no empty bucket but crossed at least one
        transient occupant (a claim or an uncommitted insert), so the caller
        should retry rather than report saturation: that occupant's owner is
        about to release or commit. Raises only when every probed bucket
        held a committed member.
        """
        vs = self._vs
        vs_load = vs._words.__getitem__ if vs.hook is None else vs.load
        read_raw = self._kcas.read_raw
        mask = self._mask
        transient = False
        for offset in range(self._maxd):
            i = (home + offset) & mask
            while True:
                raw = vs_load(i)
                word = (raw if not raw & 0x3 else read_raw(vs, i)) >> 2
                state = word & _STATE_MASK
                if state != EMPTY:
                    if state != MEMBER:
                        transient = True
                    break
                version = (word >> 3) + 1
                if vs.cas(i, word << 2, (((version << 3) | BUSY)) << 2):
                    return i, offset, version
        if transient:
            return None
        raise TableSaturated(
            f"no empty bucket within {self._maxd} of home {home}"
        )

    def _validate_dead_end(self, key: int, rb: int, offset: int, *,
                           claim_version: int | None = None,
                           check_window: bool = True) -> tuple[bool, bool]:
        """Walk a dead end and decide (genuine saturation, key present).

        Genuine means every bucket from home up to ``rb`` is a committed
        member and nothing inside the hop window may legally move into it.
        One sweep is not enough: reads land at different times, so churn can
        show a member in every bucket without any instant holding them all.
        A second sweep demands identical words; versions only ever grow, so
        an unchanged word pins that bucket for the whole interval between
        the sweeps, and all buckets overlap at the first sweep's end. When
        ``claim_version`` is given the released claim bucket must also still
        hold the Empty word we left there, anchoring the claim itself to the
        same instant. Any mismatch means the landscape can still change, so
        the add restarts instead of failing.

        A validated member holding ``key`` itself is reported separately: a
        duplicate that committed after the caller's membership scan must
        turn the add into a plain False, not a saturation failure.
        """
        mask = self._mask
        h = self._h
        words = []
        for back in range(1, offset + 1):
            b = (rb - back) & mask
            word = self._vs_read(b)
            if word & _STATE_MASK != MEMBER:
                return False, False
            resident = self._keys.load(b)
            if self._vs_read(b) != word:
                return False, False
            if resident == key:
                return False, True
            if check_window and back < h and \
                    (rb - self.home_of(resident)) & mask < h:
                return False, False  # a movable member: still transient
            words.append(word)
        if claim_version is not None:
            if self._vs_read(rb) != ((claim_version + 1) << 3) | EMPTY:
                return False, False
        for back in range(1, offset + 1):
            if self._vs_read((rb - back) & mask) != words[back - 1]:
                return False, False
        return True, False

    def find_closer_bucket(self, rb: int, offset: int) -> tuple[int, int]:
        """One displacement step for a claimed bucket (caller owns it Busy).

        Returns the new claimed bucket and its offset from home; returns the
        arguments unchanged when nothing in the window can move.
        """
        word = self._vs_read(rb)
        if word & _STATE_MASK != BUSY:
            raise ValueError("bucket is not claimed")
        nrb, noffset, _ = self._find_closer(rb, offset, word >> 3)
        return nrb, noffset

    def _find_closer(self, rb: int, offset: int, version: int):
        """Move some Member from the window [rb-H+1, rb-1] into ``rb``.

        Farthest candidate first: for each bucket ``cb`` behind ``rb``, any
        entry homed at ``cb`` and sitting in front of ``rb`` may hop to
        ``rb`` while staying inside cb's neighborhood. The move itself is a
        3-word CAS (cb's relocation count, the candidate's vs, our vs) so
        readers either see the entry at its old or its new bucket, never
        neither. The destination bit is advertised before the CAS and rolled
        back on failure; the source bit is retired after.
        """
        vs = self._vs
        rc = self._rc
        bm = self._bm
        keys = self._keys
        mask = self._mask
        busy_word = (version << 3) | BUSY
        while True:
            restart = False
            for dist in range(self._h - 1, 0, -1):
                cb = (rb - dist) & mask
                rc_before = self._rc_read(cb)
                bits = bm.load(cb)
                while bits:
                    low = bits & -bits
                    bits ^= low
                    lsb = low.bit_length() - 1
                    if lsb >= dist:
                        break  # at or past rb; moving would go backwards
                    i = (cb + lsb) & mask
                    word = self._vs_read(i)
                    if word & _STATE_MASK != MEMBER:
                        continue
                    moved_key = keys.load(i)
                    if self._vs_read(i) != word:
                        continue
                    keys.store(rb, moved_key)
                    bm.fetch_or(cb, 1 << dist)
                    desc = self._kcas.acquire()
                    desc.add(rc, cb, rc_before, rc_before + 1)
                    desc.add(vs, i, word, (word >> 3 << 3) | BUSY)
                    desc.add(vs, rb, busy_word, (version << 3) | MEMBER)
                    if self._kcas.execute(desc):
                        bm.fetch_xor(cb, 1 << lsb)
                        return i, offset - (dist - lsb), word >> 3
                    bm.fetch_xor(cb, 1 << dist)
                    restart = True
                    break
                if restart:
                    break
                if self._rc_read(cb) != rc_before:
                    restart = True
                    break
            if not restart:
                return rb, offset, version

    def uniqueness_check(self, rb: int, home: int) -> bool | None:
        """Commit an Inserting bucket, yielding to any duplicate that wins.

        True: committed to Member. False: a Member duplicate exists; the
        bucket was rolled back. None: beaten by a concurrent inserter and
        rolled back; the caller must retry the whole insertion, because the
        winner may not have committed yet. Exposed for scripted tests;
        ``add`` drives it internally.
        """
        word = self._vs_read(rb)
        if word & _STATE_MASK != INSERTING:
            raise ValueError("bucket is not in the Inserting state")
        key = self._keys.load(rb)
        return self._uniqueness_commit(
            rb, home, (rb - home) & self._mask, word >> 3, key
        )

    def _uniqueness_commit(self, rb, home, my_offset, version, key):
        """Resolve duplicate inserters; at most one same-key commit survives.

        Both duplicates advertise their bit before scanning, so at least one
        sees the other. Seeing a Member duplicate means failing the add.
        Seeing an Inserting duplicate closer to home means aborting in its
        favour. Seeing a *farther* Inserting one is not enough to proceed:
        it must also be prevented from committing, so it is killed with a
        CAS to Collided. Our own commit is the mirror image: a CAS that
        fails exactly when someone killed us first.

        Returns True (committed), False (Member duplicate), or None
        (aborted; caller restarts).
        """
        vs = self._vs
        rc = self._rc
        bm = self._bm
        keys = self._keys
        vs_load = vs._words.__getitem__ if vs.hook is None else vs.load
        rc_load = rc._words.__getitem__ if rc.hook is None else rc.load
        bm_load = bm._words.__getitem__ if bm.hook is None else bm.load
        keys_load = keys._words.__getitem__ if keys.hook is None else keys.load
        read_raw = self._kcas.read_raw
        mask = self._mask
        outcome = None
        while True:
            raw = rc_load(home)
            rc_before = (raw if not raw & 0x3 else read_raw(rc, home)) >> 2
            yield_to_peer = False
            bits = bm_load(home)
            while bits:
                low = bits & -bits
                bits ^= low
                peer_offset = low.bit_length() - 1
                if peer_offset == my_offset:
                    continue
                j = (home + peer_offset) & mask
                while True:
                    raw = vs_load(j)
                    word = (raw if not raw & 0x3 else read_raw(vs, j)) >> 2
                    state = word & _STATE_MASK
                    if state != MEMBER and state != INSERTING:
                        break
                    k = keys_load(j)
                    raw = vs_load(j)
                    if (raw if not raw & 0x3 else read_raw(vs, j)) >> 2 != word:
                        continue
                    if k != key:
                        break
                    if state == MEMBER:
                        # The duplicate is committed, so this add fails;
                        # the validated read above is its witness.
                        yield_to_peer = True
                        outcome = False
                        break
                    if peer_offset < my_offset:
                        yield_to_peer = True
                        break
                    # Farther duplicate inserter: kill it so it cannot
                    # commit after our own commit succeeds.
                    if self._vs_cas(j, word, (word >> 3 << 3) | COLLIDED):
                        break
                    continue
                if yield_to_peer:
                    break
            if yield_to_peer:
                self._vs_store(rb, (version << 3) | COLLIDED)
                break
            if self._rc_read(home) != rc_before:
                continue  # a relocation may have hidden a duplicate
            if self._vs_cas(rb, (version << 3) | INSERTING,
                            (version << 3) | MEMBER):
                return True
            break  # a duplicate collided us between scan and commit
        # Roll the dead insertion back to Empty.
        self._vs_store(rb, (version << 3) | BUSY)
        keys.store(rb, NIL_KEY)
        bm.fetch_xor(home, 1 << my_offset)
        self._vs_store(rb, ((version + 1) << 3) | EMPTY)
        return outcome

    # -- removal ---------------------------------------------------------

    def remove(self, key: int) -> bool:
        """Delete ``key``; False if absent. Deletion is physical.

        The Member -> Busy CAS is the commit point; the key wipe, bit clear
        and Empty release follow in that order so a claimant reusing the
        bucket can never have its freshly ORed bit wiped by us.
        """
        if key == NIL_KEY:
            raise ValueError("key 0 is reserved as the empty slot marker")
        home = self.home_of(key)
        vs = self._vs
        rc = self._rc
        bm = self._bm
        keys = self._keys
        vs_load = vs._words.__getitem__ if vs.hook is None else vs.load
        rc_load = rc._words.__getitem__ if rc.hook is None else rc.load
        bm_load = bm._words.__getitem__ if bm.hook is None else bm.load
        keys_load = keys._words.__getitem__ if keys.hook is None else keys.load
        read_raw = self._kcas.read_raw
        mask = self._mask
        raw = rc_load(home)
        rc_before = (raw if not raw & 0x3 else read_raw(rc, home)) >> 2
        while True:
            bits = bm_load(home)
            while bits:
                low = bits & -bits
                bits ^= low
                off = low.bit_length() - 1
                j = (home + off) & mask
                while True:
                    raw = vs_load(j)
                    word = (raw if not raw & 0x3 else read_raw(vs, j)) >> 2
                    if word & _STATE_MASK != MEMBER:
                        break
                    k = keys_load(j)
                    raw = vs_load(j)
                    if (raw if not raw & 0x3 else read_raw(vs, j)) >> 2 != word:
                        continue
                    if k != key:
                        break
                    if vs.cas(j, word << 2, ((word >> 3 << 3) | BUSY) << 2):
                        keys.store(j, NIL_KEY)
                        bm.fetch_xor(home, 1 << off)
                        self._vs_store(j, ((word >> 3) + 1 << 3) | EMPTY)
                        return True
                    continue  # lost the race; reread the bucket
            raw = rc_load(home)
            rc_after = (raw if not raw & 0x3 else read_raw(rc, home)) >> 2
            if rc_after == rc_before:
                return False
            rc_before = rc_after

    # -- introspection (quiescent) ----------------------------------------

    def snapshot(self) -> list[BucketView]:
        """Per-bucket view; coherent only while no operation is running."""
        vs = self._vs.snapshot()
        rc = self._rc.snapshot()
        bm = self._bm.snapshot()
        keys = self._keys.snapshot()
        out = []
        for i in range(self.config.capacity):
            word = vs[i] >> 2
            out.append(BucketView(
                i, keys[i], word >> 3, word & _STATE_MASK, bm[i], rc[i] >> 2,
            ))
        return out

    def member_keys(self) -> list[int]:
        """Keys currently in Member buckets; quiescent use only."""
        vs = self._vs.snapshot()
        keys = self._keys.snapshot()
        return [keys[i] for i in range(len(keys))
                if (vs[i] >> 2) & _STATE_MASK == MEMBER]

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
    def kcas_domain(self) -> KcasDomain:
        return self._kcas
