#!/usr/bin/env python3
"""Band-by-band divergence table for the pasted Gaussian measure.

Each band i gets a dispersion sigma_i large enough that its contribution
f_i to the terminal absolute moment is at least 1, so the partial sums grow
without bound.  Usage:

    python3 scripts/run_divergence_table.py [N]
"""

import sys

from robusthedge.counterexample import divergence_demo


def main():
    N = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    print(f"{'i':>3} {'sigma_i':>14} {'f_i':>18} {'partial sum':>14}")
    for row in divergence_demo(N):
        print(f"{row.i:>3} {row.sigma:>14.6g} {row.f_value:>18.12f} "
              f"{row.partial_sum:>14.6f}")


if __name__ == "__main__":
    main()
