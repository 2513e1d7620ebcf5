"""Tour of the lock-free set: inserts, lookups, and a peek at the buckets.

Run with: python3 demos/set_basics.py
"""

from hopscotch.core import LockFreeHopscotchSet, TableConfig

STATE_NAMES = {0: "Empty", 1: "Busy", 2: "Collided",
               4: "Inserting", 5: "Member"}


def main() -> None:
    table = LockFreeHopscotchSet(TableConfig(capacity=32, neighborhood=8,
                                             max_distance=32, seed=7))
    print("fresh table:", len(table), "members in", table.capacity, "buckets")

    for key in (11, 42, 977, 11):
        print(f"add({key}) -> {table.add(key)}")
    print(f"contains(42) -> {table.contains(42)}")
    print(f"remove(42)   -> {table.remove(42)}")
    print(f"contains(42) -> {table.contains(42)}")
    print("members:", sorted(table))

    print("\nhome buckets are seeded, so placement differs run to run only")
    print("if you change the seed:")
    for key in sorted(table):
        print(f"  key {key}: home bucket {table.home_of(key)}")

    print("\noccupied bucket words (version advances on every reuse):")
    for view in table.snapshot():
        if view.key or view.state:
            print(f"  bucket {view.index}: key={view.key} "
                  f"version={view.version} "
                  f"state={STATE_NAMES.get(view.state, view.state)} "
                  f"neighborhood bitmap={view.bitmap:#010b}")


if __name__ == "__main__":
    main()
