"""RK4 integration of the contour dynamics system with its Hilbert companion."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import contour as ct
from .contour import Curve
from .fields import PeriodicField, wavenumbers
from .hilbert.torus import hilbert_torus_array
from .moduli import LogPower, Modulus, norm_C1phi

DIAG_HEADER = ["t", "area", "perimeter", "arc_chord", "nC1phi_gamma", "nC1phi_h", "hcde_drift", "vmax"]


class NumericalFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SimState:
    gamma: Curve
    h: np.ndarray  # (2, N), intended H[gamma]
    t: float = 0.0

    @classmethod
    def initial(cls, gamma: Curve, t: float = 0.0) -> "SimState":
        return cls(gamma, hilbert_torus_array(gamma.array), t)


@dataclass
class StepperConfig:
    dt: float = 1e-3
    T_final: float = 1.0
    scheme: str = "RK4"
    N: int | None = None
    renorm_interval: int = 0
    dealias: bool = False
    threshold: float = ct.DEGENERACY_THRESHOLD
    snapshot_interval: int = 0
    diag_interval: int = 1
    modulus: Modulus = field(default_factory=lambda: LogPower(3.5))

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T_final < 0:
            raise ValueError("T_final must be nonnegative")
        if self.T_final > 0 and self.T_final < self.dt:
            raise ValueError("T_final must be at least dt")
        if self.scheme != "RK4":
            raise ValueError("only RK4 is supported")
        if self.renorm_interval < 0 or self.snapshot_interval < 0:
            raise ValueError("intervals must be nonnegative")


@dataclass
class DiagnosticsRecord:
    t: float
    area: float
    perimeter: float
    arc_chord: float
    norm_C1phi_gamma: float
    norm_C1phi_h: float
    hcde_consistency: float
    max_velocity: float
    flag: str = ""

    def row(self) -> list:
        return [self.t, self.area, self.perimeter, self.arc_chord, self.norm_C1phi_gamma,
                self.norm_C1phi_h, self.hcde_consistency, self.max_velocity]


def dealias(v: np.ndarray) -> np.ndarray:
    """2/3-rule: zero modes with |k| > N/3."""
    n = v.shape[-1]
    keep = np.abs(wavenumbers(n)) <= n / 3
    return np.fft.ifft(np.fft.fft(v, axis=-1) * keep, axis=-1).real


def _rhs(g: np.ndarray, cfg: StepperConfig, field_fn=None):
    v = ct._velocity_array(g) if field_fn is None else field_fn(g)
    if cfg.dealias:
        v = dealias(v)
    return v, hilbert_torus_array(v)


def step(state: SimState, cfg: StepperConfig, field_fn=None, step_index: int | None = None
         ) -> tuple[SimState, float | None]:
    """One RK4 step of (d_t gamma, d_t h) = (v[gamma], H[v[gamma]]).

    Returns the new state and, if a reprojection of h happened, its magnitude.
    ``field_fn`` replaces the velocity operator (used for the zero-field check).
    """
    dt = cfg.dt
    g, h = state.gamma.array, state.h
    k1g, k1h = _rhs(g, cfg, field_fn)
    k2g, k2h = _rhs(g + 0.5 * dt * k1g, cfg, field_fn)
    k3g, k3h = _rhs(g + 0.5 * dt * k2g, cfg, field_fn)
    k4g, k4h = _rhs(g + dt * k3g, cfg, field_fn)
    g1 = g + dt / 6 * (k1g + 2 * k2g + 2 * k3g + k4g)
    h1 = h + dt / 6 * (k1h + 2 * k2h + 2 * k3h + k4h)
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(h1))):
        raise NumericalFailure(f"non-finite state at t = {state.t + dt:g}")
    new = SimState(Curve(g1[0], g1[1], state.gamma.orientation), h1, state.t + dt)
    n = step_index if step_index is not None else int(round(new.t / dt))
    if cfg.renorm_interval and n % cfg.renorm_interval == 0:
        proj = hilbert_torus_array(g1)
        mag = float(np.max(np.abs(proj - h1)))
        return SimState(new.gamma, proj, new.t), mag
    return new, None


def hcde_consistency(state: SimState) -> float:
    return float(np.max(np.abs(state.h - hilbert_torus_array(state.gamma.array))))


def curve_norm(a: np.ndarray, m: Modulus) -> float:
    """max over components of the C^{1,phi} norm."""
    return max(norm_C1phi(PeriodicField(a[0]), m), norm_C1phi(PeriodicField(a[1]), m))


def diagnostics(state: SimState, m: Modulus, v: np.ndarray | None = None) -> DiagnosticsRecord:
    g = state.gamma
    if v is None:
        v = ct._velocity_array(g.array)
    return DiagnosticsRecord(
        t=state.t, area=ct.area(g), perimeter=ct.perimeter(g), arc_chord=ct.arc_chord(g),
        norm_C1phi_gamma=curve_norm(g.array, m), norm_C1phi_h=curve_norm(state.h, m),
        hcde_consistency=hcde_consistency(state), max_velocity=float(np.max(np.hypot(v[0], v[1]))))


@dataclass
class RunResult:
    records: list
    final: SimState
    halted: str = ""
    renorms: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    times: list = field(default_factory=list)
    angles: list = field(default_factory=list)


def run(initial: Curve, cfg: StepperConfig, out_dir: str | Path | None = None,
        track_angle: bool = False, field_fn=None, diagnostics_on: bool = True) -> RunResult:
    """Integrate to T_final, or until the arc-chord constant drops below the threshold.

    Writes diag.csv and snap_XXXXXX.json into ``out_dir`` when it is given.
    A non-finite state halts the run; the last valid snapshot is kept.
    """
    state = SimState.initial(initial)
    nsteps = int(round(cfg.T_final / cfg.dt))
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    res = RunResult([], state)

    def snap(st, i):
        if out is None:
            return
        p = out / f"snap_{i:06d}.json"
        d = st.gamma.to_json(st.t)
        d["h"] = {"x": st.h[0].tolist(), "y": st.h[1].tolist()}
        p.write_text(json.dumps(d))
        res.snapshots.append(str(p))

    def record(st, i, flag=""):
        if track_angle:
            res.times.append(st.t)
            res.angles.append(ct.orientation_angle(st.gamma))
        if not diagnostics_on or (i % max(cfg.diag_interval, 1) and i != nsteps and not flag):
            return
        r = diagnostics(st, cfg.modulus)
        r.flag = flag
        res.records.append(r)

    record(state, 0)
    snap(state, 0)
    for i in range(1, nsteps + 1):
        try:
            new, mag = step(state, cfg, field_fn, i)
        except NumericalFailure as e:
            res.halted = str(e)
            snap(state, i - 1)
            break
        state = new
        if mag is not None:
            res.renorms.append((state.t, mag))
        if ct.arc_chord(state.gamma) < cfg.threshold:
            res.halted = f"degenerate curve at t = {state.t:g}"
            record(state, i, "degenerate")
            snap(state, i)
            break
        record(state, i)
        if cfg.snapshot_interval and i % cfg.snapshot_interval == 0:
            snap(state, i)
    res.final = state
    if out is not None:
        write_csv(res.records, out / "diag.csv")
    return res


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAG_HEADER)
        for r in records:
            w.writerow([repr(float(x)) for x in r.row()])


def rotation_rate(times, angles) -> float:
    """Least-squares slope of the unwrapped orientation angle (period pi)."""
    a = np.unwrap(2 * np.asarray(angles)) / 2
    t = np.asarray(times)
    return float(np.polyfit(t, a, 1)[0])


def support_function_mode2(c: Curve, n_theta: int = 512, up: int = 8) -> float:
    """|second Fourier coefficient| of the support function h(theta) = max gamma . e_theta."""
    g = ct.upsample(c.array, up)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    e = np.stack([np.cos(th), np.sin(th)])
    hs = np.max(e.T @ g, axis=1)
    return float(np.abs(np.fft.fft(hs)[2]) / n_theta)


@dataclass
class NormTracking:
    times: list
    gamma_phi: list
    h_phi: list
    gamma_phit: list
    h_phit: list
    arc_chord: list
    ratios: dict

    def to_json(self):
        return asdict(self)


def norm_tracking(initial: Curve, cfg: StepperConfig, s: float = 3.5, record_every: int = 10
                  ) -> NormTracking:
    """C^{1,phi} and C^{1,phi~} norms of gamma and h along a run; ratios sup_t / initial."""
    phi = LogPower(s)
    phit = phi.induced()
    state = SimState.initial(initial)
    nsteps = int(round(cfg.T_final / cfg.dt))
    tr = NormTracking([], [], [], [], [], [], {})

    def rec(st):
        tr.times.append(st.t)
        tr.gamma_phi.append(curve_norm(st.gamma.array, phi))
        tr.h_phi.append(curve_norm(st.h, phi))
        tr.gamma_phit.append(curve_norm(st.gamma.array, phit))
        tr.h_phit.append(curve_norm(st.h, phit))
        tr.arc_chord.append(ct.arc_chord(st.gamma))

    rec(state)
    for i in range(1, nsteps + 1):
        state, _ = step(state, cfg, None, i)
        if i % record_every == 0 or i == nsteps:
            rec(state)
    for k in ("gamma_phi", "h_phi", "gamma_phit", "h_phit"):
        v = getattr(tr, k)
        tr.ratios[k] = float(max(v) / v[0]) if v[0] > 0 else math.inf
    tr.ratios["arc_chord_min_over_initial"] = float(min(tr.arc_chord) / tr.arc_chord[0])
    return tr


def final_state(initial: Curve, cfg: StepperConfig) -> SimState:
    state = SimState.initial(initial)
    for i in range(1, int(round(cfg.T_final / cfg.dt)) + 1):
        state, _ = step(state, cfg, None, i)
    return state


def richardson(initial: Curve, dt0: float, T: float, levels: int = 3, quantity=None) -> dict:
    """Errors and ratios under dt halving, against the finest level (levels + 1 runs)."""
    states = [final_state(initial, StepperConfig(dt=dt0 / 2 ** k, T_final=T)) for k in range(levels + 1)]
    ref = states[-1].gamma.array
    errs = [float(np.max(np.abs(s.gamma.array - ref))) for s in states[:-1]]
    diffs = [float(np.max(np.abs(states[k].gamma.array - states[k + 1].gamma.array))) for k in range(levels)]
    drifts = [hcde_consistency(s) for s in states]
    return {"dt": [dt0 / 2 ** k for k in range(levels + 1)], "errors": errs,
            "successive": diffs, "ratios": [diffs[k] / diffs[k + 1] for k in range(levels - 1)],
            "drift": drifts}
