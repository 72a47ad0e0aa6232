#!/usr/bin/env python3
"""Hammer the identifier allocator: randomized interval trials plus the
adjacent-bound squeeze that historically produced order violations and
infinite loops. Exits nonzero on any violation.

Usage: python scripts/stress_allocator.py [--trials N]
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from coedit.logoot import (
    BASE,
    BOUNDARY,
    LESS,
    MAX_ID,
    MIN_ID,
    UNIFORM,
    LogootId,
    lid_between,
    lid_compare,
)


def random_id(rng, max_depth=5):
    return LogootId(
        tuple(
            (rng.randint(1, BASE - 1), rng.randint(1, 6), rng.randint(1, 99))
            for _ in range(rng.randint(1, max_depth))
        )
    )


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=1_000_000)
    args = ap.parse_args()
    rng = random.Random(0xA110C)
    t0 = time.time()

    made = 0
    max_depth = 0
    while made < args.trials:
        a, b = random_id(rng), random_id(rng)
        order = lid_compare(a, b)
        if order == 0:
            continue
        p, q = (a, b) if order == LESS else (b, a)
        strategy = BOUNDARY if made % 2 else UNIFORM
        out = lid_between(p, q, site=9, clock=made + 1, strategy=strategy, rng=rng)
        if lid_compare(p, out) != LESS or lid_compare(out, q) != LESS:
            print(f"ORDER VIOLATION: {p} < {out} < {q} does not hold")
            return 1
        max_depth = max(max_depth, len(out.path))
        made += 1

    # adjacency squeeze: allocate forever into a shrinking interval
    left, right = MIN_ID, lid_between(MIN_ID, MAX_ID, 1, 1, rng=rng)
    for k in range(2, 5000):
        mid = lid_between(left, right, site=1 + k % 4, clock=k, rng=rng)
        if lid_compare(left, mid) != LESS or lid_compare(mid, right) != LESS:
            print(f"SQUEEZE VIOLATION at step {k}")
            return 1
        right = mid
        max_depth = max(max_depth, len(mid.path))

    print(
        f"{args.trials} interval trials + 5000-step squeeze: no order violations, "
        f"no loops; max path depth {max_depth}; {time.time() - t0:.0f}s"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
