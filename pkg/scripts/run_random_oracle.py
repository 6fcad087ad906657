#!/usr/bin/env python3
"""Seeded random-instance oracle sweep with timing.

Draws random trees, claims, and families, then checks that the backward
recursion, the global measure LP, and the primal hedging LP agree.  Usage:

    python3 scripts/run_random_oracle.py [count] [seed] [--exact]
"""

import sys
import time

from robusthedge.suites import duality_suite


def main():
    args = [a for a in sys.argv[1:] if not a.startswith("--")]
    count = int(args[0]) if args else 100
    seed = int(args[1]) if len(args) > 1 else 20260823
    exact = "--exact" in sys.argv
    t0 = time.perf_counter()
    res = duality_suite(seed=seed, n=count, exact=exact)
    dt = time.perf_counter() - t0
    print(res.summary_line(), f"({'exact' if exact else 'float'}, {dt:.2f}s)")
    for f in res.failures:
        print("  ", f)
    sys.exit(0 if res.ok else 1)


if __name__ == "__main__":
    main()
