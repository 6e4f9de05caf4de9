"""Principal-value quadrature on the line.

Sources live on the nodes y_j = -L + j dx, j = 0..M, so the window [-L, L] is
covered by a composite trapezoid (node M sits at +L, where compactly supported
fields vanish). At a node target x_i the PV integral over the window is

    sum_{j != i} w_j (G_j - G_i)/(x_i - y_j) - w_i dG/dy(x_i) + G_i log((x_i + L)/(L - x_i)),

i.e. the trapezoid of the subtracted integrand (whose value at y = x_i is -dG/dy)
plus the exact window integral of G_i/(x_i - y). Beyond the window the integrand
is smooth; it is integrated with Gauss-Legendre in t = L/|y|, pairing y and -y
so that a nonzero limit of G at infinity is handled as a symmetric PV.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from ..fields import LineField

N_FAR = 48


@lru_cache(maxsize=None)
def _gauss01(n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1), 0.5 * w


def far_nodes(L: float, n: int = N_FAR):
    """Nodes y = +-L/t beyond the window and weights (for each sign) of dy."""
    t, w = _gauss01(n)
    y = L / t
    W = w * L / t ** 2
    return np.concatenate([y, -y]), np.concatenate([W, W])


def node_coords(L: float, M: int) -> np.ndarray:
    return -L + (2 * L / M) * np.arange(M + 1)


def trap_weights(M: int, dx: float) -> np.ndarray:
    w = np.full(M + 1, dx)
    w[0] = w[-1] = dx / 2
    return w


def window_log(L: float, M: int) -> np.ndarray:
    """log((x + L)/(L - x)) at the nodes; zero at the two ends by convention."""
    x = node_coords(L, M)
    lam = np.zeros(M + 1)
    lam[1:-1] = np.log((x[1:-1] + L) / (L - x[1:-1]))
    return lam


@lru_cache(maxsize=16)
def _kernel_fft(n_src: int, q0: int, q1: int, dx: float, nfft: int):
    m = np.arange(q0 - (n_src - 1), q1)
    k = np.zeros(m.size)
    nz = m != 0
    k[nz] = 1.0 / (m[nz] * dx)
    return sfft.rfft(k, nfft), m.size


def cauchy_sum(u: np.ndarray, dx: float, q0: int, q1: int) -> np.ndarray:
    """sum_{j != q} u_j / ((q - j) dx) for integer targets q0 <= q < q1 (axis 0)."""
    n = u.shape[0]
    nk = (q1 - q0) + n - 1
    nfft = sfft.next_fast_len(n + nk - 1, real=True)
    kf, _ = _kernel_fft(n, q0, q1, float(dx), nfft)
    uf = sfft.rfft(u, nfft, axis=0)
    kf = kf.reshape((-1,) + (1,) * (u.ndim - 1))
    full = sfft.irfft(uf * kf, nfft, axis=0)
    return full[n - 1:n - 1 + (q1 - q0)]


def pv_window_nodes(g: np.ndarray, L: float, dg: np.ndarray | None = None) -> np.ndarray:
    """PV int_{-L}^{L} g(y)/(x - y) dy at every node (no 1/pi), g of shape (M+1, ...).

    ``dg`` is dg/dy at the nodes; centered differences are used if omitted.
    """
    n = g.shape[0]
    M = n - 1
    dx = 2 * L / M
    w = trap_weights(M, dx).reshape((-1,) + (1,) * (g.ndim - 1))
    if dg is None:
        dg = np.gradient(g, dx, axis=0)
    cw = cauchy_sum(w[:, 0] if g.ndim > 1 else w, dx, 0, n)
    cw = cw.reshape((-1,) + (1,) * (g.ndim - 1))
    lam = window_log(L, M).reshape((-1,) + (1,) * (g.ndim - 1))
    return cauchy_sum(w * g, dx, 0, n) - g * cw - w * dg + g * lam


def cauchy_regular(values: np.ndarray, L: float, targets: np.ndarray) -> np.ndarray:
    """int_{-L}^{L} g(y)/(x - y) dy by trapezoid for targets off the window."""
    M = values.shape[0] - 1
    y = node_coords(L, M)
    w = trap_weights(M, 2 * L / M)
    t = np.asarray(targets, dtype=float)
    out = np.empty(t.shape + values.shape[1:])
    for s in range(0, t.size, 256):
        tt = t[s:s + 256]
        k = w[None, :] / (tt[:, None] - y[None, :])
        out[s:s + 256] = k @ values
    return out


def far_tail(x: np.ndarray, far_vals: np.ndarray, L: float) -> np.ndarray:
    """int_{|y| > L} G(x, y)/(x - y) dy from G at ``far_nodes`` (shape (m, 2n) or (2n,))."""
    y, W = far_nodes(L, far_vals.shape[-1] // 2)
    x = np.asarray(x, dtype=float)
    k = W[None, :] / (x[:, None] - y[None, :])
    if far_vals.ndim == 1:
        return k @ far_vals
    return np.sum(k * far_vals, axis=1)


def _ext_from_compact(f: LineField) -> np.ndarray:
    if not f.is_compact():
        raise ValueError("hilbert_line needs a field vanishing at the window edge")
    return np.concatenate([f.samples, [0.0]])


def hilbert_line_nodes(f: LineField) -> np.ndarray:
    """H[f] at the M+1 window nodes (including +L)."""
    g = _ext_from_compact(f)
    return pv_window_nodes(g, f.L) / np.pi


def hilbert_line_at(f: LineField, x) -> np.ndarray:
    """H[f] at arbitrary points outside the support, by the regular trapezoid."""
    g = _ext_from_compact(f)
    return cauchy_regular(g, f.L, np.asarray(x, dtype=float)) / np.pi


def hilbert_line(f: LineField) -> LineField:
    """H[f] = (1/pi) PV int f(y)/(x - y) dy on the extended grid [-2L, 2L), 2M points.

    The returned samples do not vanish at the edges (the transform decays like 1/x).
    """
    M = f.M
    if M % 2:
        raise ValueError("M must be even")
    g = _ext_from_compact(f)
    dx = f.dx
    w = trap_weights(M, dx)
    q0, q1 = -M // 2, M + M // 2
    out = cauchy_sum(w * g, dx, q0, q1)
    inner = pv_window_nodes(g, f.L)
    out[M // 2:M // 2 + M + 1] = inner
    return LineField(out / np.pi, 2 * f.L)


class Sampled:
    """A non-compact function known at the window nodes and at the far nodes."""

    def __init__(self, L: float, nodes: np.ndarray, far: np.ndarray):
        self.L = float(L)
        self.nodes = np.asarray(nodes, dtype=float)
        self.far = np.asarray(far, dtype=float)

    @property
    def M(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def x(self) -> np.ndarray:
        return node_coords(self.L, self.M)

    def __mul__(self, other):
        if isinstance(other, Sampled):
            return Sampled(self.L, self.nodes * other.nodes, self.far * other.far)
        return Sampled(self.L, self.nodes * other, self.far * other)

    __rmul__ = __mul__

    def __add__(self, other):
        return Sampled(self.L, self.nodes + other.nodes, self.far + other.far)

    def __sub__(self, other):
        return Sampled(self.L, self.nodes - other.nodes, self.far - other.far)


def sampled_hilbert(f: LineField) -> "Sampled":
    """H[f] for compact f at the window nodes and far nodes."""
    yq, _ = far_nodes(f.L)
    return Sampled(f.L, hilbert_line_nodes(f), hilbert_line_at(f, yq))


def compact_sampled(f: LineField) -> "Sampled":
    yq, _ = far_nodes(f.L)
    return Sampled(f.L, _ext_from_compact(f), np.zeros(yq.size))


def hilbert_sampled(g: Sampled) -> np.ndarray:
    """H[g] (1/pi included) at the window nodes for a non-compact g.

    Window part by the subtracted trapezoid, the rest of the line by the far
    quadrature. Values at and next to the two window ends are not reliable.
    """
    inner = pv_window_nodes(g.nodes, g.L)
    tail = far_tail(g.x, np.broadcast_to(g.far, (g.M + 1, g.far.size)), g.L)
    return (inner + tail) / np.pi


def decay_tail_bound(fs, L: float, x_abs: float) -> float:
    """Bound on (1/pi) int_{|y|>L} |prod H[f_k](y)| / |x - y| dy from |H f(y)| <= c/(|y| - R).

    c = (1/pi) int |f| and R is the support radius; valid for two factors.
    """
    cs = [np.sum(np.abs(f.samples)) * f.dx / np.pi for f in fs]
    R = max(f.support_radius() for f in fs)
    c = np.prod(cs)
    return float(2 * c / (np.pi * (L - R) * (L - x_abs)))
