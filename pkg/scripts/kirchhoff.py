"""Rotation rate of the 1.5 x 1 ellipse against the Kirchhoff value, over N and dt."""
import argparse

from patchlab import contour as ct
from patchlab.evolve import StepperConfig, rotation_rate, run, support_function_mode2


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=1.5)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--N", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--dt", type=float, nargs="+", default=[1e-2, 5e-3])
    a = ap.parse_args()
    ref = ct.kirchhoff_rate(a.a, a.b)
    print(f"Kirchhoff rate {ref:.8f}")
    print(f"{'N':>5} {'dt':>8} {'rate':>12} {'rel err':>10} {'mode-2 drift':>13}")
    for N in a.N:
        c = ct.ellipse(N, a.a, a.b)
        m0 = support_function_mode2(c)
        for dt in a.dt:
            res = run(c, StepperConfig(dt=dt, T_final=a.T), track_angle=True, diagnostics_on=False)
            rate = abs(rotation_rate(res.times, res.angles))
            drift = abs(support_function_mode2(res.final.gamma) - m0) / m0
            print(f"{N:5d} {dt:8.1e} {rate:12.8f} {abs(rate - ref) / ref:10.2e} {drift:13.2e}")


if __name__ == "__main__":
    main()
