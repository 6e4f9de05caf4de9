"""Residual of the H[T_j] recursion against the direct transform, for both sign conventions.

    python scripts/lemma_T_conventions.py --M 1024 2048 4096
"""
import argparse

import numpy as np

from patchlab.fields import LineField, bump, bump_prime
from patchlab.hilbert import TContext, op_HT_recursion


def fields(M, L=3.0):
    x = -L + 2 * L / M * np.arange(M)
    return [LineField(0.5 * bump(x, 0.1, 1.0), L, deriv=0.5 * bump_prime(x, 0.1, 1.0)),
            LineField(0.4 * bump(x, -0.2, 0.9), L, deriv=0.4 * bump_prime(x, -0.2, 0.9))]


def worst(M, convention, max_n):
    fs = fields(M)
    ctx = TContext(fs, convention=convention)
    out = 0.0
    for n1 in range(max_n + 1):
        for n2 in range(max_n + 1 - n1):
            for j in range(1, 3):
                out = max(out, op_HT_recursion(j, (n1, n2), fs, ctx=ctx).residual)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--M", type=int, nargs="+", default=[1024, 2048, 4096])
    ap.add_argument("--max-n", type=int, default=3)
    a = ap.parse_args()
    print(f"{'M':>6} {'derived':>12} {'printed':>12}")
    for M in a.M:
        print(f"{M:6d} {worst(M, 'derived', a.max_n):12.3e} {worst(M, 'printed', a.max_n):12.3e}")


if __name__ == "__main__":
    main()
