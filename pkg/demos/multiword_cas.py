"""Atomic multi-word updates: all words change together or none do.

Run with: python3 demos/multiword_cas.py
"""

import threading

from hopscotch.kcas import acquire_descriptor, kcas_execute, kcas_read, pack_value
from hopscotch.words import AtomicWordArray


def show(arr, label):
    vals = [kcas_read(arr, i) for i in range(len(arr.snapshot()))]
    print(f"{label}: {vals}")


def main() -> None:
    # Words carry a 2-bit tag, so raw cells are seeded through pack_value.
    arr = AtomicWordArray(3, fill=pack_value(10))
    show(arr, "start")

    desc = acquire_descriptor()
    desc.add(arr, 0, 10, 11)
    desc.add(arr, 1, 10, 11)
    desc.add(arr, 2, 10, 11)
    print("3-word increment ->", kcas_execute(desc))
    show(arr, "after")

    desc = acquire_descriptor()
    desc.add(arr, 0, 11, 12)
    desc.add(arr, 1, 99, 12)  # wrong expectation sinks the whole batch
    desc.add(arr, 2, 11, 12)
    print("mismatched attempt ->", kcas_execute(desc))
    show(arr, "unchanged")

    # Two threads racing +1 on the same pair: every successful execute is
    # one atomic step, so the words can never drift apart.
    pair = AtomicWordArray(2)

    def bump(times):
        done = 0
        while done < times:
            a = kcas_read(pair, 0)
            b = kcas_read(pair, 1)
            desc = acquire_descriptor()
            desc.add(pair, 0, a, a + 1)
            desc.add(pair, 1, b, b + 1)
            if kcas_execute(desc):
                done += 1

    workers = [threading.Thread(target=bump, args=(5000,)) for _ in range(2)]
    for t in workers:
        t.start()
    for t in workers:
        t.join()
    show(pair, "2 threads x 5000 paired increments")


if __name__ == "__main__":
    main()
