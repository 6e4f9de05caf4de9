"""Closed curves, the contour-dynamics velocity and its local series decomposition."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate

from .fields import LineField, PeriodicField, _is_pow2, wavenumbers
from .hilbert.identities import pv_two_point
from .hilbert.line import far_nodes, far_tail, node_coords, trap_weights
from .hilbert.torus import hilbert_torus_array
from .hilbert.twopoint import TwoPointField
from .moduli import LogPower, Modulus

DEGENERACY_THRESHOLD = 1e-3


class DegenerateCurveError(ValueError):
    pass


class SeriesDivergenceError(ArithmeticError):
    pass


class Orientation(str, Enum):
    CCW = "CCW"
    CW = "CW"


def _spec_deriv(a: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral derivative along the last axis."""
    n = a.shape[-1]
    mult = (1j * wavenumbers(n)) ** order
    if order % 2:
        mult[n // 2] = 0.0
    return np.fft.ifft(np.fft.fft(a, axis=-1) * mult, axis=-1).real


def upsample(a: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolant on a grid ``factor`` times finer (last axis)."""
    n = a.shape[-1]
    m = n * factor
    c = np.fft.fft(a, axis=-1)
    out = np.zeros(a.shape[:-1] + (m,), dtype=complex)
    h = n // 2
    out[..., :h] = c[..., :h]
    out[..., m - h + 1:] = c[..., h + 1:]
    out[..., h] = c[..., h] / 2
    out[..., m - h] = c[..., h] / 2
    return np.fft.ifft(out, axis=-1).real * factor


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PATCHLAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Curve:
    """gamma sampled at xi_k = 2 pi k / N."""

    x_samples: np.ndarray
    y_samples: np.ndarray
    orientation: Orientation | None = None

    def __post_init__(self):
        x = np.asarray(self.x_samples, dtype=float).copy()
        y = np.asarray(self.y_samples, dtype=float).copy()
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y samples must be 1-D of equal length")
        if not _is_pow2(x.size) or x.size < 4:
            raise ValueError("N must be a power of two, at least 4")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x_samples", x)
        object.__setattr__(self, "y_samples", y)
        if self.orientation is None:
            a = _signed_area(np.stack([x, y]))
            object.__setattr__(self, "orientation", Orientation.CCW if a >= 0 else Orientation.CW)
        else:
            object.__setattr__(self, "orientation", Orientation(self.orientation))

    @classmethod
    def from_array(cls, g: np.ndarray, orientation=None) -> "Curve":
        return cls(g[0], g[1], orientation)

    @property
    def N(self) -> int:
        return self.x_samples.size

    @property
    def xi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.N) / self.N

    @property
    def array(self) -> np.ndarray:
        return np.stack([self.x_samples, self.y_samples])

    def derivative(self, order: int = 1) -> np.ndarray:
        return _spec_deriv(self.array, order)

    def components(self) -> tuple[PeriodicField, PeriodicField]:
        return PeriodicField(self.x_samples), PeriodicField(self.y_samples)

    def translated(self, v) -> "Curve":
        return Curve(self.x_samples + v[0], self.y_samples + v[1], self.orientation)

    def rotated(self, beta: float) -> "Curve":
        c, s = math.cos(beta), math.sin(beta)
        x, y = self.x_samples, self.y_samples
        return Curve(c * x - s * y, s * x + c * y, self.orientation)

    def reversed(self) -> "Curve":
        idx = (-np.arange(self.N)) % self.N
        o = Orientation.CW if self.orientation == Orientation.CCW else Orientation.CCW
        return Curve(self.x_samples[idx], self.y_samples[idx], o)

    def to_json(self, t: float = 0.0) -> dict:
        return {"N": self.N, "orientation": self.orientation.value,
                "x": self.x_samples.tolist(), "y": self.y_samples.tolist(), "t": t}

    @classmethod
    def from_json(cls, d: dict) -> "Curve":
        c = cls(np.asarray(d["x"]), np.asarray(d["y"]), d.get("orientation"))
        if c.N != d["N"]:
            raise ValueError("sample count does not match N")
        return c

    def dumps(self, t: float = 0.0) -> str:
        return json.dumps(self.to_json(t))


# --- generators ----------------------------------------------------------------

def _xi(n):
    return 2 * np.pi * np.arange(n) / n


def circle(N: int, R: float = 1.0) -> Curve:
    t = _xi(N)
    return Curve(R * np.cos(t), R * np.sin(t))


def ellipse(N: int, a: float = 1.5, b: float = 1.0) -> Curve:
    t = _xi(N)
    return Curve(a * np.cos(t), b * np.sin(t))


def perturbed_circle(N: int, R: float = 1.0, m: int = 3, eps: float = 0.0) -> Curve:
    t = _xi(N)
    r = R * (1 + eps * np.cos(m * t))
    return Curve(r * np.cos(t), r * np.sin(t))


def lacunary_profile(N: int, modulus: Modulus, seed: int = 0) -> np.ndarray:
    """sum_j phi(2^-j) 2^-j sin(2^j xi + phase_j) over 2^j <= N/3, phases from the seed."""
    rng = np.random.default_rng(seed)
    t = _xi(N)
    out = np.zeros(N)
    j = 1
    while 2 ** j <= N / 3:
        ph = rng.uniform(0, 2 * np.pi)
        out += modulus(2.0 ** -j) * 2.0 ** -j * np.sin(2 ** j * t + ph)
        j += 1
    return out


def logmod_perturbed_circle(N: int, R: float = 1.0, s: float = 3.5, eps: float = 1e-2,
                            seed: int = 0) -> Curve:
    """Radial perturbation that is C^{1,phi} for phi = (-log r)^-s but not C^{1,alpha}."""
    t = _xi(N)
    r = R * (1 + eps * lacunary_profile(N, LogPower(s), seed))
    return Curve(r * np.cos(t), r * np.sin(t))


GENERATORS = {
    "circle": circle,
    "ellipse": ellipse,
    "perturbed_circle": perturbed_circle,
    "logmod_perturbed_circle": logmod_perturbed_circle,
}


def make_curve(name: str, N: int, **params) -> Curve:
    if name not in GENERATORS:
        raise KeyError(f"unknown curve generator {name!r}")
    return GENERATORS[name](N, **params)


# --- geometry --------------------------------------------------------------------

def _signed_area(g: np.ndarray) -> float:
    d = _spec_deriv(g)
    return float(0.5 * np.mean(g[0] * d[1] - g[1] * d[0]) * 2 * np.pi)


def area(c: Curve) -> float:
    """Signed area 1/2 oint (x dy - y dx); positive for CCW."""
    return _signed_area(c.array)


def perimeter(c: Curve) -> float:
    d = c.derivative()
    return float(np.mean(np.hypot(d[0], d[1])) * 2 * np.pi)


def centroid(c: Curve) -> np.ndarray:
    g, d = c.array, c.derivative()
    A = area(c)
    # int x dA = oint x^2/2 dy, int y dA = -oint y^2/2 dx
    mx = np.mean(0.5 * g[0] ** 2 * d[1]) * 2 * np.pi
    my = -np.mean(0.5 * g[1] ** 2 * d[0]) * 2 * np.pi
    return np.array([mx / A, my / A])


def second_moments(c: Curve) -> tuple[float, float, float]:
    """Central area moments (Ixx, Iyy, Ixy)."""
    cx, cy = centroid(c)
    x, y = c.x_samples - cx, c.y_samples - cy
    d = c.derivative()
    w = 2 * np.pi / c.N
    Ixx = np.sum(x ** 3 / 3 * d[1]) * w
    Iyy = -np.sum(y ** 3 / 3 * d[0]) * w
    Ixy = np.sum(x ** 2 * y / 2 * d[1]) * w
    return float(Ixx), float(Iyy), float(Ixy)


def orientation_angle(c: Curve) -> float:
    Ixx, Iyy, Ixy = second_moments(c)
    return 0.5 * math.atan2(2 * Ixy, Ixx - Iyy)


def arc_chord(c: Curve) -> float:
    """min |gamma(xi) - gamma(eta)| / d_T(xi, eta) over sample pairs.

    Neighbouring samples use |d gamma| at the midpoint (trigonometric interpolant).
    """
    g = c.array
    n = c.N
    h = 2 * np.pi / n
    d = c.derivative()
    mid = np.stack([PeriodicField(d[0]).shift(h / 2).samples, PeriodicField(d[1]).shift(h / 2).samples])
    best = float(np.min(np.hypot(mid[0], mid[1])))
    for m in range(2, n // 2 + 1):
        diff = g - np.roll(g, -m, axis=1)
        best = min(best, float(np.min(np.hypot(diff[0], diff[1]))) / (m * h))
    return best


def _check_curve(c: Curve, threshold: float):
    ac = arc_chord(c)
    if not ac > threshold:
        raise DegenerateCurveError(f"arc-chord constant {ac:.3e} at or below {threshold:g}")
    return ac


# --- velocity ----------------------------------------------------------------------

def _rows(fn, n, chunk=128):
    """Apply fn to row blocks of targets, in threads if PATCHLAB_THREADS > 1."""
    blocks = [np.arange(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    th = _threads()
    if th > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(th) as ex:
            parts = list(ex.map(fn, blocks))
    else:
        parts = [fn(b) for b in blocks]
    return np.concatenate(parts, axis=-1)


def _velocity_array(g: np.ndarray) -> np.ndarray:
    n = g.shape[-1]
    h = 2 * np.pi / n
    d = _spec_deriv(g)
    speed = np.hypot(d[0], d[1])
    xi = _xi(n)

    def block(r):
        dx = g[0][r][:, None] - g[0][None, :]
        dy = g[1][r][:, None] - g[1][None, :]
        s2 = np.abs(2 * np.sin((xi[r][:, None] - xi[None, :]) / 2))
        with np.errstate(divide="ignore", invalid="ignore"):
            A = np.log(np.hypot(dx, dy) / s2)
        A[np.arange(r.size), r] = np.log(speed[r])
        return h * np.stack([A @ d[0], A @ d[1]])

    smooth = _rows(block, n)
    k = wavenumbers(n)
    mult = np.zeros(n)
    nz = k != 0
    mult[nz] = -np.pi / np.abs(k[nz])
    sing = np.fft.ifft(np.fft.fft(d, axis=-1) * mult, axis=-1).real
    return smooth + sing


def velocity(c: Curve, check: bool = True, threshold: float = DEGENERACY_THRESHOLD) -> np.ndarray:
    """v(xi_k) = int d_eta gamma(eta) ln|gamma(xi_k) - gamma(eta)| d eta, shape (2, N)."""
    if check:
        _check_curve(c, threshold)
    return _velocity_array(c.array)


@dataclass
class VelocityDerivative:
    value: np.ndarray
    quadrature: np.ndarray
    residual: float


def dv_quadrature(g: np.ndarray, weight=None) -> np.ndarray:
    """PV int K(xi, eta) d gamma(eta) d eta with K = (dgamma . gamma'(xi))/|dgamma|^2.

    ``weight(xi_i, eta_j)`` multiplies the integrand (used for the regular part);
    without it the kernel is de-singularized by (1/2) cot((xi - eta)/2) and the
    subtracted piece is added back as pi H[gamma'].
    """
    n = g.shape[-1]
    h = 2 * np.pi / n
    d = _spec_deriv(g)
    dd = _spec_deriv(g, 2)
    xi = _xi(n)
    cdiag = (d[0] * dd[0] + d[1] * dd[1]) / (2 * (d[0] ** 2 + d[1] ** 2))

    def block(r):
        dx = g[0][r][:, None] - g[0][None, :]
        dy = g[1][r][:, None] - g[1][None, :]
        t = xi[r][:, None] - xi[None, :]
        idx = np.arange(r.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            K = (dx * d[0][r][:, None] + dy * d[1][r][:, None]) / (dx ** 2 + dy ** 2)
            if weight is None:
                K = K - 0.5 / np.tan(t / 2)
        if weight is None:
            K[idx, r] = cdiag[r]
        else:
            K[idx, r] = 0.0
            K = K * weight(xi[r][:, None], xi[None, :])
        return h * np.stack([K @ d[0], K @ d[1]])

    out = _rows(block, n)
    if weight is None:
        out = out + np.pi * hilbert_torus_array(d)
    return out


def velocity_derivative(c: Curve, check: bool = True, threshold: float = DEGENERACY_THRESHOLD
                        ) -> VelocityDerivative:
    """d_xi v by spectral differentiation, cross-checked by the PV quadrature."""
    if check:
        _check_curve(c, threshold)
    v = _velocity_array(c.array)
    spec = _spec_deriv(v)
    quad = dv_quadrature(c.array)
    return VelocityDerivative(spec, quad, float(np.max(np.abs(spec - quad))))


def hcde_rhs(c: Curve, h=None, check: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """(v[gamma], H[v[gamma]]); ``h`` does not enter the right-hand side."""
    v = velocity(c, check=check)
    return v, hilbert_torus_array(v)


# --- Biot-Savart oracle ---------------------------------------------------------------

def biot_savart_ellipse(a: float, b: float, pts: np.ndarray, omega: float = 2 * np.pi,
                        epsabs: float = 1e-13) -> np.ndarray:
    """u(x) = (omega/2pi) int_E (x - y)^perp / |x - y|^2 dy for the ellipse x^2/a^2 + y^2/b^2 <= 1.

    Polar coordinates about x: u = -(omega/2pi) int rho(theta) e_theta^perp d theta,
    with rho the length of the ray from x inside the ellipse (closed form).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.empty_like(pts)
    for k, (px, py) in enumerate(pts):
        def rho(th):
            cx, sy = math.cos(th), math.sin(th)
            A = cx ** 2 / a ** 2 + sy ** 2 / b ** 2
            B = 2 * (px * cx / a ** 2 + py * sy / b ** 2)
            C = px ** 2 / a ** 2 + py ** 2 / b ** 2 - 1
            disc = B * B - 4 * A * C
            if disc <= 0:
                return 0.0
            sq = math.sqrt(disc)
            t1, t2 = (-B - sq) / (2 * A), (-B + sq) / (2 * A)
            return max(t2, 0.0) - max(t1, 0.0)

        # tangent directions at boundary points are kinks of rho
        pts_th = []
        C0 = px ** 2 / a ** 2 + py ** 2 / b ** 2 - 1
        if abs(C0) < 1e-12:
            nx, ny = px / a ** 2, py / b ** 2
            base = math.atan2(nx, -ny) % (2 * np.pi)
            pts_th = sorted({base, (base + np.pi) % (2 * np.pi)})
        ux = integrate.quad(lambda th: rho(th) * math.sin(th), 0, 2 * np.pi,
                            points=pts_th or None, epsabs=epsabs, epsrel=1e-12, limit=200)[0]
        uy = integrate.quad(lambda th: -rho(th) * math.cos(th), 0, 2 * np.pi,
                            points=pts_th or None, epsabs=epsabs, epsrel=1e-12, limit=200)[0]
        # e_theta^perp = (-sin, cos)
        out[k] = -(omega / (2 * np.pi)) * np.array([-ux, -uy])
    return out


def kirchhoff_rate(a: float, b: float, omega: float = 2 * np.pi) -> float:
    return omega * a * b / (a + b) ** 2


# --- localization and the series decomposition -------------------------------------------

def smoothstep(t):
    """Quintic smoothstep: 0 for t <= 0, 1 for t >= 1, C^2 in between."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t * t)


def smoothstep_prime(t):
    inside = (t > 0) & (t < 1)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30 * t ** 2 * (1 - t) ** 2, 0.0)


def cutoff(s, delta):
    """1 on |s| <= delta/8, 0 on |s| >= delta/4."""
    a = np.abs(np.asarray(s, dtype=float))
    return 1.0 - smoothstep((a - delta / 8) / (delta / 8))


def cutoff_prime(s, delta):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    return -np.sign(s) * smoothstep_prime((a - delta / 8) / (delta / 8)) / (delta / 8)


@dataclass
class LocalFrame:
    xi0: float
    delta: float
    U: np.ndarray
    zeta: tuple[LineField, LineField]
    chi: LineField
    curve: Curve = field(repr=False)
    refine: int = 4
    fine: np.ndarray | None = field(default=None, repr=False)  # (gamma, gamma') on [-pi, pi), shifted

    @property
    def grid(self) -> np.ndarray:
        return self.zeta[0].x


def localize(c: Curve, xi0: float, delta: float, refine: int = 4) -> LocalFrame:
    """zeta(s) = (gamma(xi0 + s) - gamma(xi0) - U s) chi~(s), chi~(s) = chi(s/4), on [-pi, pi)."""
    if not 0 < delta < np.pi:
        raise ValueError("delta must lie in (0, pi) so the cutoff fits in one period")
    n = c.N
    h = 2 * np.pi / n
    g = np.stack([PeriodicField(c.x_samples).shift(xi0).samples,
                  PeriodicField(c.y_samples).shift(xi0).samples])
    gf = upsample(g, refine)
    d = _spec_deriv(g)
    df = upsample(d, refine)
    U = d[:, 0].copy()
    if np.hypot(*U) == 0:
        raise DegenerateCurveError("|U| = 0: degenerate local frame")
    m = n * refine
    s = (np.arange(m) - m // 2) * (h / refine)
    # grid s_j = -pi + j ds, i.e. roll the upsampled periodic samples
    gs = np.roll(gf, m // 2, axis=1)
    ds = np.roll(df, m // 2, axis=1)
    ct, ctp = cutoff(s / 4, delta), cutoff_prime(s / 4, delta) / 4
    lin = gs - gs[:, m // 2:m // 2 + 1] - U[:, None] * s[None, :]
    z = lin * ct
    zp = (ds - U[:, None]) * ct + lin * ctp
    zeta = tuple(LineField(z[i], np.pi, deriv=zp[i]) for i in range(2))
    chi = LineField(cutoff(s, delta), np.pi, deriv=cutoff_prime(s, delta))
    return LocalFrame(xi0, delta, U, zeta, chi, c, refine, np.stack([gs, ds]))


def frame_sup_dzeta(frame: LocalFrame) -> float:
    """sup |d zeta| / |U|, an upper bound on sup |Q[zeta]| / |U|."""
    d0, d1 = frame.zeta[0].derivative().samples, frame.zeta[1].derivative().samples
    return float(np.max(np.hypot(d0, d1)) / np.hypot(*frame.U))


def select_delta(c: Curve, xi0: float, target: float = 0.25, delta0: float = 0.5,
                 floor: float = 1e-3, refine: int = 4) -> LocalFrame:
    """Halve delta from delta0 until sup|Q[zeta]|/|U| <= target.

    delta is never taken below ``floor`` nor below 8 fine-grid steps, where the
    target window |xi - xi0| < delta/4 would hold only a node or two.
    """
    delta = delta0
    floor = max(floor, 8 * 2 * np.pi / (c.N * refine))
    while delta >= floor:
        fr = localize(c, xi0, delta, refine)
        if frame_sup_dzeta(fr) <= target:
            return fr
        delta /= 2
    raise SeriesDivergenceError(f"no delta >= {floor:g} brings sup|Q[zeta]| below {target}")


class DKernel:
    """D(xi, eta) = 2 (U . Q[zeta])/|U|^2 + |Q[zeta]|^2/|U|^2, so |Q + U|^2 = |U|^2 (1 + D)."""

    def __init__(self, frame: LocalFrame):
        self.frame = frame
        U = frame.U
        u2 = float(U @ U)
        self.u2 = u2
        self.field = TwoPointField(list(frame.zeta),
                                   lambda qs: (2 * (U[0] * qs[0] + U[1] * qs[1]) + qs[0] ** 2 + qs[1] ** 2) / u2,
                                   "D")

    def __call__(self, x, y):
        return self.field(x, y)

    def sup_bound(self) -> float:
        q = frame_sup_dzeta(self.frame)
        return 2 * q + q * q


@dataclass
class SeriesResult:
    xi: np.ndarray
    value: np.ndarray
    direct: np.ndarray
    residual: float
    tail_bound: float
    sup_D: float
    n_max: int
    term_norms: dict
    terms: np.ndarray = field(repr=False)
    regular: np.ndarray = field(repr=False)
    v2: np.ndarray = field(repr=False)
    sup_D_bound: float = float("nan")


def _tp(frame, F, label):
    return TwoPointField(list(frame.zeta), F, label)


def series_dv(frame: LocalFrame, n_max: int = 8, direct: np.ndarray | None = None) -> SeriesResult:
    """d_xi v near xi0 from the localized expansion V1 - V2 + d_xi v_r.

    V1 = |U|^-2 [ (U.W)(S1 U + S2) + (W.S3) U + W_1 S4 + W_2 S5 ], W = d zeta(xi) + U,
    with S_i = sum_n S_{i,n} the PV integrals over the line of (-D)^n/(xi - eta)
    times 1, d zeta(eta), Q[zeta], Q[zeta_1] d zeta(eta), Q[zeta_2] d zeta(eta).
    V2 is the same integrand times (1 - chi(xi - eta)), evaluated directly, and
    d_xi v_r is the torus quadrature with weight 1 - chi.
    """
    D = DKernel(frame)
    q = D.sup_bound()
    if q >= 1:
        raise SeriesDivergenceError(f"sup|D| bound {q:.3f} >= 1; shrink delta")
    z0, z1 = frame.zeta
    L, M = z0.L, z0.M
    s = node_coords(L, M)
    ds = 2 * L / M
    r = frame.refine
    # torus targets within delta/4 of xi0 (every r-th line node)
    j_t = np.arange(M // 2 - r * int(frame.delta / 4 / (ds * r)), M // 2 + r * int(frame.delta / 4 / (ds * r)) + 1, r)
    j_t = j_t[np.abs(s[j_t]) < frame.delta / 4]
    U = frame.U
    u2 = float(U @ U)
    zp = np.stack([np.concatenate([z.derivative().samples, [0.0]]) for z in frame.zeta])
    W = zp[:, j_t] + U[:, None]
    UW = U @ W

    jj = np.arange(M + 1)

    def S(n, kind):
        """S_{i,n} at the targets; kind picks the integrand factor."""
        if kind == "1" and n == 0:
            return np.zeros(j_t.size)

        def F(qs, kind=kind):
            Dv = (2 * (U[0] * qs[0] + U[1] * qs[1]) + qs[0] ** 2 + qs[1] ** 2) / u2
            base = (-Dv) ** n
            if kind in ("1", "2x", "2y"):
                return base
            if kind == "3x":
                return base * qs[0]
            if kind == "3y":
                return base * qs[1]
            if kind in ("4x", "4y"):
                return base * qs[0]
            return base * qs[1]

        tp = _tp(frame, F, f"S{kind},{n}")
        if kind in ("1", "3x", "3y"):
            rows = lambda rr: tp.nodes(rr[:, None], jj[None, :])
            return pv_two_point(rows, tp.diag(), L, M, rows=j_t, G_far=tp.far_matrix)
        comp = 0 if kind[-1] == "x" else 1
        a = zp[comp]
        rows = lambda rr: a[None, :] * tp.nodes(rr[:, None], jj[None, :])
        return pv_two_point(rows, a * tp.diag(), L, M, rows=j_t)

    # sup |D| over the target rows (the series only sees these pairs)
    Drows = D.field.nodes(j_t[:, None], jj[None, :])
    q_rows = float(np.max(np.abs(Drows)))

    kinds = ["1", "2x", "2y", "3x", "3y", "4x", "4y", "5x", "5y"]
    n_eval = max(n_max, 2)
    terms = np.zeros((n_eval + 1, 2, j_t.size))
    norms = {k: [] for k in kinds}
    for n in range(n_eval + 1):
        Sv = {k: S(n, k) for k in kinds}
        for k in kinds:
            norms[k].append(float(np.max(np.abs(Sv[k]))))
        S3 = np.stack([Sv["3x"], Sv["3y"]])
        S4 = np.stack([Sv["4x"], Sv["4y"]])
        S5 = np.stack([Sv["5x"], Sv["5y"]])
        S2 = np.stack([Sv["2x"], Sv["2y"]])
        WS3 = W[0] * S3[0] + W[1] * S3[1]
        terms[n] = (UW * (Sv["1"] * U[:, None] + S2) + WS3 * U[:, None] + W[0] * S4 + W[1] * S5) / u2

    # V2: (1 - chi(xi - eta)) F / (xi - eta) over the line, symmetric at infinity
    v2 = np.zeros((2, j_t.size))
    w = trap_weights(M, ds)
    yq, _ = far_nodes(L)
    for k, jt in enumerate(j_t):
        st = s[jt]
        zt = np.array([z0.samples[jt], z1.samples[jt]])
        with np.errstate(divide="ignore", invalid="ignore"):
            Q = np.stack([(np.concatenate([z.samples, [0.0]])[jt] - np.concatenate([z.samples, [0.0]])) / (st - s)
                          for z in frame.zeta])
        Q[:, jt] = 0.0
        wgt = 1.0 - cutoff(st - s, frame.delta)
        QU = Q + U[:, None]
        Fs = ((QU[0] * W[0, k] + QU[1] * W[1, k]) / (QU[0] ** 2 + QU[1] ** 2))[None, :] * (zp + U[:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            Iw = wgt / (st - s)
        Iw[jt] = 0.0
        Qf = zt[:, None] / (st - yq[None, :])
        QUf = Qf + U[:, None]
        Ff = ((QUf[0] * W[0, k] + QUf[1] * W[1, k]) / (QUf[0] ** 2 + QUf[1] ** 2))[None, :] * U[:, None]
        for i in range(2):
            v2[i, k] = np.sum(w * Iw * Fs[i]) + far_tail(np.array([st]), Ff[i], L)[0]

    # regular part: periodic trapezoid of (1 - chi) K gamma' on the refined grid
    gfin, dfin = frame.fine
    sf = s[:-1]
    reg = np.zeros((2, j_t.size))
    for k, jt in enumerate(j_t):
        dx_ = gfin[0, jt] - gfin[0]
        dy_ = gfin[1, jt] - gfin[1]
        r2 = dx_ ** 2 + dy_ ** 2
        r2[jt] = 1.0
        K = (dx_ * dfin[0, jt] + dy_ * dfin[1, jt]) / r2
        t = ((sf[jt] - sf + np.pi) % (2 * np.pi)) - np.pi
        K = K * (1.0 - cutoff(t, frame.delta))
        K[jt] = 0.0
        reg[:, k] = ds * (dfin @ K)
    c = frame.curve
    xi_t = (frame.xi0 + s[j_t]) % (2 * np.pi)

    V1 = terms[:n_max + 1].sum(axis=0)
    value = V1 - v2 + reg
    if direct is None:
        direct = velocity_derivative(c, check=False).value
    # targets sit on the refined grid, so read the reference off its trigonometric interpolant
    dref = np.stack([PeriodicField(direct[i])(xi_t) for i in range(2)])
    # tail: the largest observed C with |term_n| <= C q^n, continued geometrically
    per_n = np.array([np.max(np.abs(terms[n])) for n in range(n_eval + 1)])
    if q_rows > 0:
        scale = max(per_n[n] / q_rows ** n for n in range(1, n_eval + 1))
        tail = scale * q_rows ** (n_max + 1) / (1 - q_rows)
    else:
        tail = 0.0
    norms = {k: v[:n_max + 1] for k, v in norms.items()}
    norms["total"] = per_n[:n_max + 1].tolist()
    return SeriesResult(xi_t, value, dref, float(np.max(np.abs(value - dref))), float(tail), q_rows,
                        n_max, norms, terms[:n_max + 1], reg, v2, q)
