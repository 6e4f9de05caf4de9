"""Hilbert transform on the torus: spectral multiplier and a cotangent quadrature."""

from __future__ import annotations

import numpy as np

from ..fields import PeriodicField, wavenumbers


def hilbert_torus(f: PeriodicField) -> PeriodicField:
    """Conjugate function, multiplier -i sgn(n); the Nyquist mode maps to 0."""
    n = f.N
    mult = -1j * np.sign(wavenumbers(n))
    mult[n // 2] = 0.0
    return PeriodicField(np.fft.ifft(np.fft.fft(f.samples) * mult).real)


def hilbert_torus_array(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Multiplier applied along ``axis`` of a real array (N a power of two)."""
    n = a.shape[axis]
    mult = -1j * np.sign(wavenumbers(n))
    mult[n // 2] = 0.0
    shape = [1] * a.ndim
    shape[axis] = n
    return np.fft.ifft(np.fft.fft(a, axis=axis) * mult.reshape(shape), axis=axis).real


def hilbert_torus_quadrature(f: PeriodicField) -> np.ndarray:
    """(1/2pi) PV int f(y) cot((x - y)/2) dy at the staggered points xi_k + pi/N.

    The targets sit halfway between sources, so the sources are symmetric about
    every target and no node is singular. This is a plain circular convolution.
    """
    n = f.N
    if n % 2:
        raise ValueError("staggered quadrature needs even N")
    h = 2 * np.pi / n
    # offsets x_k + h/2 - y_j = (m + 1/2) h, m = k - j mod n
    kern = np.cos(((np.arange(n) + 0.5) * h) / 2) / np.sin(((np.arange(n) + 0.5) * h) / 2) / n
    return np.fft.ifft(np.fft.fft(f.samples) * np.fft.fft(kern)).real


def diff_quotient_torus(f: PeriodicField, x, y) -> np.ndarray:
    """Periodic difference quotient (f(x) - f(y)) cot((x - y)/2) / 2, diagonal f'(x).

    This is the torus counterpart of (f(x) - f(y))/(x - y): the two agree to
    leading order near the diagonal, and the x-transform of it commutes with
    the difference quotient of H[f] up to the x-mean.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    fx, fy = f(x), f(y)
    t = x - y
    out = np.empty(x.shape)
    diag = np.isclose(np.sin(t / 2), 0.0, atol=1e-14)
    out[~diag] = (fx[~diag] - fy[~diag]) * 0.5 / np.tan(t[~diag] / 2)
    out[diag] = f.derivative()(x[diag])
    return out


def commutation_residual(f: PeriodicField, ys, n_samples: int | None = None) -> float:
    """max over y of | H_x[Q f(., y)] - (Q[H f](., y) - mean_x Q[H f](., y)) |."""
    n = f.N if n_samples is None else n_samples
    xg = 2 * np.pi * np.arange(n) / n
    g = hilbert_torus(f)
    worst = 0.0
    for y in np.atleast_1d(ys):
        lhs = hilbert_torus(PeriodicField(diff_quotient_torus(f, xg, y))).samples
        rq = diff_quotient_torus(g, xg, y)
        rhs = rq - rq.mean()
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
