"""C^{1,phi} norms along a run from a log-modulus rough circle; boundedness ratios at two grids."""
import argparse
import json

from patchlab import contour as ct
from patchlab.evolve import StepperConfig, norm_tracking


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--s", type=float, default=3.5)
    ap.add_argument("--eps", type=float, default=1e-2)
    ap.add_argument("--T", type=float, default=0.1)
    ap.add_argument("--dt", type=float, default=2e-3)
    ap.add_argument("--N", type=int, nargs="+", default=[512, 1024])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="dump the full series")
    a = ap.parse_args()
    for N in a.N:
        c = ct.logmod_perturbed_circle(N, 1.0, a.s, a.eps, a.seed)
        tr = norm_tracking(c, StepperConfig(dt=a.dt, T_final=a.T), a.s, record_every=5)
        if a.json:
            print(json.dumps({"N": N, **tr.to_json()}))
        else:
            r = tr.ratios
            print(f"N={N:5d} gamma_phi {r['gamma_phi']:.4f} h_phi {r['h_phi']:.4f} "
                  f"gamma_phit {r['gamma_phit']:.4f} h_phit {r['h_phit']:.4f} "
                  f"arc_chord min/init {r['arc_chord_min_over_initial']:.4f}")


if __name__ == "__main__":
    main()
