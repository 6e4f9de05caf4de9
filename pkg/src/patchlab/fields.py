"""Sampled fields on the torus and on the line."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in numpy FFT order."""
    return np.fft.fftfreq(n, d=1.0 / n)


@dataclass(frozen=True)
class PeriodicField:
    """N uniform samples of a real function on [0, 2pi)."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1:
            raise ValueError("PeriodicField samples must be one-dimensional")
        if not _is_pow2(s.size):
            raise ValueError(f"N must be a power of two, got {s.size}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, fn, n: int) -> "PeriodicField":
        return cls(fn(2 * np.pi * np.arange(n) / n))

    @property
    def N(self) -> int:
        return self.samples.size

    @property
    def xi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.N) / self.N

    @property
    def h(self) -> float:
        return 2 * np.pi / self.N

    def coeffs(self) -> np.ndarray:
        """Fourier coefficients c_n with f = sum c_n e^{in xi}."""
        return np.fft.fft(self.samples) / self.N

    @classmethod
    def from_coeffs(cls, c: np.ndarray) -> "PeriodicField":
        return cls(np.fft.ifft(c * c.size).real)

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def derivative(self, order: int = 1) -> "PeriodicField":
        n = self.N
        k = wavenumbers(n)
        mult = (1j * k) ** order
        if order % 2 == 1:
            # the Nyquist mode has no real odd derivative
            mult[n // 2] = 0.0
        return PeriodicField(np.fft.ifft(np.fft.fft(self.samples) * mult).real)

    def shift(self, a: float) -> "PeriodicField":
        """Samples of f(. + a), exact for the trigonometric interpolant."""
        n = self.N
        k = wavenumbers(n)
        ph = np.exp(1j * k * a)
        ph[n // 2] = np.cos(n // 2 * a)
        return PeriodicField(np.fft.ifft(np.fft.fft(self.samples) * ph).real)

    def __call__(self, x) -> np.ndarray:
        """Evaluate the trigonometric interpolant at arbitrary points."""
        x = np.asarray(x, dtype=float)
        n = self.N
        c = self.coeffs()
        k = wavenumbers(n)
        half = n // 2
        out = np.zeros(x.shape)
        flat = x.reshape(-1)
        res = np.empty(flat.size)
        for start in range(0, flat.size, 4096):
            xs = flat[start:start + 4096, None]
            e = np.exp(1j * xs * k[None, :])
            v = (e[:, np.arange(n) != half] @ c[np.arange(n) != half]).real
            v += c[half].real * np.cos(half * xs[:, 0])
            res[start:start + 4096] = v
        out[...] = res.reshape(x.shape)
        return out

    def __add__(self, other):
        o = other.samples if isinstance(other, PeriodicField) else other
        return PeriodicField(self.samples + o)

    def __sub__(self, other):
        o = other.samples if isinstance(other, PeriodicField) else other
        return PeriodicField(self.samples - o)

    def __mul__(self, other):
        o = other.samples if isinstance(other, PeriodicField) else other
        return PeriodicField(self.samples * o)

    __rmul__ = __mul__

    def __neg__(self):
        return PeriodicField(-self.samples)

    def to_json(self) -> dict:
        return {"N": self.N, "samples": self.samples.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "PeriodicField":
        f = cls(np.asarray(d["samples"], dtype=float))
        if f.N != d["N"]:
            raise ValueError("sample count does not match N")
        return f


@dataclass(frozen=True)
class LineField:
    """Samples x_j = -L + j dx, j = 0..M-1, dx = 2L/M, of a function on the line.

    Compactly supported fields vanish outside ``support`` and are treated as
    zero beyond the window. Fields that do not vanish at the window edge
    (Hilbert transforms, for instance) are plain grid samples.
    """

    samples: np.ndarray
    L: float
    deriv: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 8:
            raise ValueError("LineField needs at least 8 one-dimensional samples")
        if not self.L > 0:
            raise ValueError("half-width L must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if self.deriv is not None:
            d = np.asarray(self.deriv, dtype=float)
            if d.shape != s.shape:
                raise ValueError("derivative samples do not match")
            d.setflags(write=False)
            object.__setattr__(self, "deriv", d)

    @classmethod
    def from_function(cls, fn, L: float, M: int, dfn=None) -> "LineField":
        x = -L + (2 * L / M) * np.arange(M)
        d = None if dfn is None else dfn(x)
        return cls(fn(x), L, d)

    @property
    def M(self) -> int:
        return self.samples.size

    @property
    def dx(self) -> float:
        return 2 * self.L / self.M

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.M)

    @property
    def support(self) -> tuple[int, int]:
        """Index range [lo, hi) outside which the samples are exactly zero."""
        nz = np.flatnonzero(self.samples)
        if nz.size == 0:
            return (0, 0)
        return (int(nz[0]), int(nz[-1]) + 1)

    def is_compact(self) -> bool:
        lo, hi = self.support
        return lo >= 1 and hi <= self.M - 1 or lo == hi

    def support_radius(self) -> float:
        lo, hi = self.support
        if lo == hi:
            return 0.0
        x = self.x
        return float(max(abs(x[lo]), abs(x[hi - 1])))

    def derivative(self) -> "LineField":
        """Derivative samples: the stored exact derivative if present, else spectral."""
        if self.deriv is not None:
            return LineField(self.deriv, self.L)
        k = 2 * np.pi * np.fft.rfftfreq(self.M, d=self.dx)
        d = np.fft.irfft(np.fft.rfft(self.samples) * 1j * k, n=self.M)
        return LineField(d, self.L)

    def __call__(self, x) -> np.ndarray:
        """Exact at grid nodes, zero outside the window, linear in between."""
        return np.interp(x, self.x, self.samples, left=0.0, right=0.0)

    def with_samples(self, s) -> "LineField":
        return LineField(s, self.L)

    def __mul__(self, other):
        o = other.samples if isinstance(other, LineField) else other
        return LineField(self.samples * o, self.L)

    __rmul__ = __mul__

    def __add__(self, other):
        o = other.samples if isinstance(other, LineField) else other
        return LineField(self.samples + o, self.L)

    def __sub__(self, other):
        o = other.samples if isinstance(other, LineField) else other
        return LineField(self.samples - o, self.L)

    def __pow__(self, p):
        return LineField(self.samples ** p, self.L)

    def to_json(self) -> dict:
        return {"L": self.L, "M": self.M, "dx": self.dx, "samples": self.samples.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "LineField":
        f = cls(np.asarray(d["samples"], dtype=float), float(d["L"]))
        if f.M != d["M"]:
            raise ValueError("sample count does not match M")
        return f


def bump(x, center=0.0, radius=1.0, height=1.0):
    """C-infinity bump exp(1 - 1/(1 - t^2)) scaled to peak ``height``."""
    t = (np.asarray(x, dtype=float) - center) / radius
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = height * np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


def bump_prime(x, center=0.0, radius=1.0, height=1.0):
    t = (np.asarray(x, dtype=float) - center) / radius
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    tm = t[m]
    out[m] = height * np.exp(1.0 - 1.0 / (1.0 - tm ** 2)) * (-2 * tm / (1 - tm ** 2) ** 2) / radius
    return out
