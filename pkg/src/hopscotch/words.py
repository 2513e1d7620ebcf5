"""Emulated 64-bit atomic words.

CPython executes a single ``array`` item read or write atomically under the
GIL, and the GIL hand-off is a full fence, so plain loads observe a
sequentially consistent order. Read-modify-write steps (CAS and the fetch_*
family) additionally take a striped lock so the read and the write of one
primitive happen as a unit. Every mutation goes through a lock, including
plain stores; otherwise a store could land between a CAS's read and write and
be lost. Loads never lock.

A lock is scoped to a single primitive and never held across two of them, so
code built on top keeps its own progress behaviour: a thread suspended
*between* primitives holds nothing.

``cas_guarded`` is a double-compare single-swap: the write additionally
requires a word in another array to hold an expected value at the moment the
swap happens. The guard word is read, never written, inside the critical
section, so there is no lock nesting and no deadlock. These operations would
be single instructions (or an LL/SC pair) on real hardware.
"""

from array import array
from threading import Lock

WORD_MASK = (1 << 64) - 1


class AtomicWordArray:
    """Fixed-length array of unsigned 64-bit words with CAS-style updates.

    ``hook``, when set, is called as ``hook(op, words, index)`` immediately
    before every operation, outside any lock. Schedulers use it to park
    threads at well-defined points; production paths leave it ``None``.
    Install hooks only while the array is quiescent: hot paths are allowed
    to check ``hook`` once per operation and take a frame-free load path.
    """

    __slots__ = ("_words", "_locks", "_stripe_mask", "hook")

    def __init__(self, length: int, fill: int = 0, stripes: int = 64):
        if length <= 0:
            raise ValueError("length must be positive")
        self._words = array("Q", [fill & WORD_MASK]) * length
        n = 1
        while n < min(stripes, length):
            n <<= 1
        self._locks = tuple(Lock() for _ in range(n))
        self._stripe_mask = n - 1
        self.hook = None

    def __len__(self) -> int:
        return len(self._words)

    def load(self, index: int) -> int:
        if self.hook is not None:
            self.hook("load", self, index)
        return self._words[index]

    def store(self, index: int, value: int) -> None:
        if self.hook is not None:
            self.hook("store", self, index)
        with self._locks[index & self._stripe_mask]:
            self._words[index] = value & WORD_MASK

    def cas(self, index: int, expected: int, new: int) -> bool:
        """Atomically replace ``expected`` with ``new``; return whether it did."""
        if self.hook is not None:
            self.hook("cas", self, index)
        words = self._words
        with self._locks[index & self._stripe_mask]:
            if words[index] != expected & WORD_MASK:
                return False
            words[index] = new & WORD_MASK
            return True

    def fetch_or(self, index: int, bits: int) -> int:
        """Atomically OR ``bits`` into the word; return the previous value."""
        if self.hook is not None:
            self.hook("fetch_or", self, index)
        words = self._words
        with self._locks[index & self._stripe_mask]:
            old = words[index]
            words[index] = old | (bits & WORD_MASK)
            return old

    def fetch_xor(self, index: int, bits: int) -> int:
        """Atomically XOR ``bits`` into the word; return the previous value."""
        if self.hook is not None:
            self.hook("fetch_xor", self, index)
        words = self._words
        with self._locks[index & self._stripe_mask]:
            old = words[index]
            words[index] = old ^ (bits & WORD_MASK)
            return old

    def cas_guarded(
        self,
        index: int,
        expected: int,
        new: int,
        guard: "AtomicWordArray",
        guard_index: int,
        guard_expected: int,
    ) -> tuple[int, bool]:
        """CAS that also requires ``guard[guard_index] == guard_expected``.

        Returns ``(previous value, wrote?)``. The previous value lets callers
        distinguish "already held ``new``" from a genuine mismatch without a
        second read. Linearizes at the guard read: the target word cannot
        change while its stripe lock is held, so both comparisons hold at one
        instant.
        """
        if self.hook is not None:
            self.hook("cas_guarded", self, index)
        words = self._words
        with self._locks[index & self._stripe_mask]:
            old = words[index]
            if old != expected & WORD_MASK:
                return old, False
            if guard._words[guard_index] != guard_expected & WORD_MASK:
                return old, False
            words[index] = new & WORD_MASK
            return old, True

    def snapshot(self) -> list[int]:
        """Unlocked copy of all words; meaningful only at quiescence."""
        return list(self._words)
