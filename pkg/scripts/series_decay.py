"""Per-order norms of the localized series for d_xi v, and the series-vs-direct residual."""
import argparse

from patchlab import contour as ct


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--curve", default="ellipse", choices=sorted(ct.GENERATORS))
    ap.add_argument("--N", type=int, default=512)
    ap.add_argument("--xi0", type=float, default=0.4)
    ap.add_argument("--n-max", type=int, default=8)
    a = ap.parse_args()
    c = ct.make_curve(a.curve, a.N)
    fr = ct.select_delta(c, a.xi0)
    dv = ct.velocity_derivative(c).value
    r = ct.series_dv(fr, a.n_max, direct=dv)
    print(f"delta {fr.delta:g}  sup|D| {r.sup_D:.3e}  residual {r.residual:.3e}  tail {r.tail_bound:.3e}")
    tot = r.term_norms["total"]
    for n, t in enumerate(tot):
        ratio = f"{t / tot[n - 1]:.3e}" if n > 0 and tot[n - 1] > 0 else ""
        print(f"n={n:2d} |term| {t:.3e} {ratio}")


if __name__ == "__main__":
    main()
