"""Line Hilbert transform of sqrt(1 - y^2) against the closed form x on |x| <= 0.8.

The square-root edge limits the subtracted trapezoid to h^1.5, so the error
ratio under halving settles near 2.83 rather than 4.
"""
import argparse

import numpy as np

from patchlab.fields import LineField
from patchlab.hilbert import hilbert_line


def error(M, L=2.0):
    x = -L + 2 * L / M * np.arange(M)
    H = hilbert_line(LineField(np.sqrt(np.clip(1 - x ** 2, 0, None)), L))
    m = np.abs(H.x) <= 0.8
    return float(np.max(np.abs(H.samples[m] - H.x[m])))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--M", type=int, nargs="+", default=[512, 1024, 2048, 4096, 8192])
    a = ap.parse_args()
    prev = None
    for M in a.M:
        e = error(M)
        print(f"M={M:6d} err {e:.3e}" + (f"  ratio {prev / e:.3f}" if prev else ""))
        prev = e


if __name__ == "__main__":
    main()
