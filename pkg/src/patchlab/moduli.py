"""Moduli of continuity, the induced modulus, assumption checks and discrete seminorms."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate

from .fields import LineField, PeriodicField

R_MAX = math.exp(-1.0)


class DomainError(ValueError):
    pass


class IntegrabilityError(ArithmeticError):
    pass


class Modulus:
    """Base class. Subclasses implement ``_raw`` on (0, r_max]."""

    r_max: float = R_MAX

    def _raw(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(~(r > 0)):
            raise DomainError("modulus evaluated at r <= 0")
        out = self._raw(np.minimum(r, self.r_max))
        return out if out.ndim else float(out)

    def of_u(self, u):
        """phi(e^-u) for u >= -ln r_max, written to avoid underflow at large u."""
        return self._raw(np.exp(-np.asarray(u, dtype=float)))

    def power(self, theta: float) -> "Modulus":
        return PowerOf(self, float(theta))

    def induced(self) -> "Modulus":
        """phi~(r) = int_0^r phi(r')/r' dr' as a modulus with the same cap."""
        return Induced(self)

    def to_config(self) -> dict:
        raise NotImplementedError


def _check_cap(r_max):
    if not 0 < r_max <= R_MAX + 1e-15:
        raise ValueError(f"domain cap must lie in (0, e^-1], got {r_max}")


@dataclass(frozen=True)
class LogPower(Modulus):
    """(-ln r)^(-s), optionally scaled."""

    s: float
    r_max: float = R_MAX
    scale: float = 1.0

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("LogPower exponent must be positive")
        _check_cap(self.r_max)

    def _raw(self, r):
        return self.scale * (-np.log(r)) ** (-self.s)

    def of_u(self, u):
        return self.scale * np.asarray(u, dtype=float) ** (-self.s)

    def power(self, theta):
        return LogPower(self.s * theta, self.r_max, self.scale ** theta)

    def induced(self):
        if self.s <= 1:
            raise IntegrabilityError(f"(-ln r)^(-{self.s}) / r is not integrable at 0")
        return LogPower(self.s - 1, self.r_max, self.scale / (self.s - 1))

    def to_config(self):
        return {"family": "log_power", "s": self.s}


@dataclass(frozen=True)
class Hoelder(Modulus):
    """r^alpha, optionally scaled."""

    alpha: float
    r_max: float = R_MAX
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("Hoelder exponent must lie in (0, 1)")
        _check_cap(self.r_max)

    def _raw(self, r):
        return self.scale * r ** self.alpha

    def of_u(self, u):
        return self.scale * np.exp(-self.alpha * np.asarray(u, dtype=float))

    def power(self, theta):
        return Hoelder(self.alpha * theta, self.r_max, self.scale ** theta)

    def induced(self):
        return Hoelder(self.alpha, self.r_max, self.scale / self.alpha)

    def to_config(self):
        return {"family": "hoelder", "alpha": self.alpha}


@dataclass(frozen=True)
class Table(Modulus):
    """Piecewise-linear modulus through (0, 0) and the given knots."""

    knots: tuple
    r_max: float = R_MAX

    def __post_init__(self):
        k = tuple((float(a), float(b)) for a, b in self.knots)
        if len(k) < 1:
            raise ValueError("table needs at least one knot")
        r = np.array([a for a, _ in k])
        v = np.array([b for _, b in k])
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("table knots must be positive and strictly increasing in r")
        if np.any(v <= 0) or np.any(np.diff(v) < 0):
            raise ValueError("table values must be positive and nondecreasing")
        object.__setattr__(self, "knots", k)
        _check_cap(self.r_max)

    def _raw(self, r):
        rr = np.concatenate([[0.0], [a for a, _ in self.knots]])
        vv = np.concatenate([[0.0], [b for _, b in self.knots]])
        return np.interp(r, rr, vv)

    def breakpoints(self):
        return [a for a, _ in self.knots if a < self.r_max]

    def to_config(self):
        return {"family": "table", "knots": [list(k) for k in self.knots]}


@dataclass(frozen=True)
class PowerOf(Modulus):
    base: Modulus
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "r_max", self.base.r_max)

    def _raw(self, r):
        return self.base._raw(r) ** self.theta

    def of_u(self, u):
        return self.base.of_u(u) ** self.theta


@dataclass(frozen=True)
class Induced(Modulus):
    """Quadrature-backed induced modulus for families without a closed form."""

    base: Modulus

    def __post_init__(self):
        object.__setattr__(self, "r_max", self.base.r_max)

    def _raw(self, r):
        r = np.asarray(r, dtype=float)
        flat = [induced_modulus_quad(self.base, float(x)) for x in r.reshape(-1)]
        return np.array(flat).reshape(r.shape)


def modulus_from_config(cfg: dict) -> Modulus:
    cfg = dict(cfg)
    fam = cfg.pop("family", None)
    cap = cfg.pop("r_max", R_MAX)
    allowed = {"log_power": {"s"}, "hoelder": {"alpha"}, "table": {"knots"}}
    if fam not in allowed:
        raise ValueError(f"unknown modulus family {fam!r}")
    extra = set(cfg) - allowed[fam]
    if extra:
        raise ValueError(f"unknown modulus keys {sorted(extra)}")
    missing = allowed[fam] - set(cfg)
    if missing:
        raise ValueError(f"missing modulus keys {sorted(missing)}")
    if fam == "log_power":
        return LogPower(float(cfg["s"]), cap)
    if fam == "hoelder":
        return Hoelder(float(cfg["alpha"]), cap)
    return Table(tuple(tuple(k) for k in cfg["knots"]), cap)


def eval_modulus(m: Modulus, r) -> float:
    return m(r)


# --- induced modulus -------------------------------------------------------

def _log_integral(g, u0: float, breaks=(), tol: float = 1e-13) -> float:
    """int_{u0}^inf g(u) du, raising IntegrabilityError on divergence.

    The tail is cut into pieces [u0 4^k, u0 4^(k+1)]; a non-integrable tail
    shows up as pieces that stop shrinking.
    """
    u0 = float(u0)
    lo = max(u0, 1e-300)
    pieces = []
    edges = [lo * 4.0 ** k for k in range(0, 21)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            pts = [p for p in breaks if a < p < b]
            v, _ = integrate.quad(g, a, b, points=pts or None, epsabs=tol, epsrel=1e-13, limit=200)
            pieces.append(v)
        p = np.array(pieces)
        last = p[-6:]
        if last[-1] > 0 and np.all(last[1:] >= last[:-1] * (1 - 1e-9)):
            raise IntegrabilityError("tail pieces do not decay; integral diverges")
        # slowly decaying (power-law) tails: the pieces are close to geometric
        rho = p[-1] / p[-2] if p[-2] > 0 else 0.0
        if 0 < rho < 1 and p[-1] > tol:
            tail = p[-1] * rho / (1 - rho)
        else:
            tail, _ = integrate.quad(g, edges[-1], np.inf, epsabs=tol, epsrel=1e-13, limit=200)
    return float(p.sum() + tail)


def induced_modulus_quad(m: Modulus, r: float, power: float = 1.0) -> float:
    """int_0^r phi(r')^power / r' dr' by quadrature in u = -ln r'."""
    if not r > 0:
        raise DomainError("induced modulus needs r > 0")
    if r > m.r_max * (1 + 1e-15):
        raise DomainError("induced modulus is defined on (0, r_max]")

    def g(u):
        return float(m.of_u(u)) ** power

    breaks = []
    if isinstance(m, Table):
        breaks = [-math.log(a) for a in m.breakpoints()]
    return _log_integral(g, -math.log(r), breaks)


def induced_modulus(m: Modulus, r: float) -> float:
    """phi~(r); closed forms for LogPower and Hoelder, quadrature otherwise."""
    if not r > 0:
        raise DomainError("induced modulus needs r > 0")
    if r > m.r_max * (1 + 1e-15):
        raise DomainError("induced modulus is defined on (0, r_max]")
    if isinstance(m, LogPower):
        if m.s <= 1:
            raise IntegrabilityError("LogPower with s <= 1 has no induced modulus")
        return m.scale * (-math.log(r)) ** (1 - m.s) / (m.s - 1)
    if isinstance(m, Hoelder):
        return m.scale * r ** m.alpha / m.alpha
    return induced_modulus_quad(m, r)


# --- reports ---------------------------------------------------------------

@dataclass
class CheckReport:
    check: str
    passes: bool
    values: Any
    witness: Any = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {"check": self.check, "passes": bool(self.passes),
             "values": _jsonable(self.values), "witness": _jsonable(self.witness)}
        d.update({k: _jsonable(v) for k, v in self.extra.items()})
        return d


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


@dataclass(frozen=True)
class SeminormReport:
    value: float
    witness_pair: tuple
    pair_count: int


# --- assumption checks -------------------------------------------------------

def default_r_grid(n: int = 24, r_min: float = 1e-12) -> np.ndarray:
    return np.geomspace(R_MAX, r_min, n)


def check_A1(m: Modulus, theta: float, r_grid=None, threshold: float | None = None) -> CheckReport:
    """Values of int_0^r phi^theta / r' along a grid decreasing to 0."""
    if not 0 < theta < 0.5:
        raise ValueError("theta must lie in (0, 1/2)")
    r_grid = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    if np.any(np.diff(r_grid) >= 0):
        raise ValueError("r grid must be decreasing")
    try:
        vals = np.array([induced_modulus_quad(m, float(r), power=theta) for r in r_grid])
    except IntegrabilityError:
        return CheckReport("A1", False, [math.inf] * len(r_grid), None,
                           {"theta": theta, "reason": "divergent"})
    thr = vals[0] if threshold is None else threshold
    passes = bool(np.all(np.isfinite(vals)) and np.all(np.diff(vals) < 0) and vals[-1] < thr)
    return CheckReport("A1", passes, vals, float(r_grid[-1]), {"theta": theta})


def check_A2(m: Modulus, delta_grid=None, C: float = 1.0, cap: float = 1e3,
             n_r: int = 200) -> CheckReport:
    """sup over r < C delta of phi(r/delta) phi(delta) / phi(r), per delta."""
    delta_grid = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] if delta_grid is None else delta_grid
    per = []
    best = (-math.inf, None)
    for d in delta_grid:
        r = np.geomspace(C * d * 1e-10, C * d, n_r, endpoint=False)
        ratio = m(r / d) * m(d) / m(r)
        i = int(np.argmax(ratio))
        per.append(float(ratio[i]))
        if ratio[i] > best[0]:
            best = (float(ratio[i]), (float(d), float(r[i])))
    return CheckReport("A2", best[0] <= cap, per, best[1], {"cap": cap, "max": best[0]})


def _pairs_seminorm(g: np.ndarray, pts: np.ndarray, phi: Modulus) -> tuple[float, tuple]:
    d = np.abs(pts[:, None] - pts[None, :])
    diff = np.abs(g[:, None] - g[None, :])
    iu = np.triu_indices(len(pts), 1)
    ratio = diff[iu] / phi(d[iu])
    k = int(np.argmax(ratio))
    return float(ratio[k]), (float(pts[iu[0][k]]), float(pts[iu[1][k]]))


def check_A3(m: Modulus, r_grid=None, rel_tol: float = 0.1) -> CheckReport:
    """Discrete C^{phi~} seminorm of phi(r)(-ln r), and its change under refinement."""
    if r_grid is None:
        # geometric toward 0 plus uniform near r_max, where the sup sits for large s
        r_grid = np.unique(np.concatenate([default_r_grid(64), np.linspace(1e-3, m.r_max, 64)]))[::-1]
    r_grid = np.asarray(r_grid, dtype=float)
    tilde = m.induced()

    def g(r):
        rc = np.minimum(r, m.r_max)
        return m(rc) * (-np.log(rc))

    coarse, wit = _pairs_seminorm(g(r_grid), r_grid, tilde)
    lr = np.log(np.sort(r_grid))
    fine_r = np.exp(np.sort(np.concatenate([lr, 0.5 * (lr[1:] + lr[:-1])])))
    fine, wit_f = _pairs_seminorm(g(fine_r), fine_r, tilde)
    stable = abs(fine - coarse) <= rel_tol * max(fine, 1e-300) or fine == coarse == 0
    passes = bool(math.isfinite(fine) and stable)
    return CheckReport("A3", passes, [coarse, fine], wit_f, {"rel_tol": rel_tol})


# --- seminorms ---------------------------------------------------------------

ALL_PAIRS_MAX = 1024


def _separations(n: int, periodic: bool, dyadic: bool) -> np.ndarray:
    top = n // 2 if periodic else n - 1
    if dyadic:
        return np.array([2 ** j for j in range(int(math.log2(max(top, 1))) + 1) if 2 ** j <= top])
    return np.arange(1, top + 1)


def seminorm_Cphi(f, m: Modulus, pairs: str = "auto") -> SeminormReport:
    """sup |f(x) - f(y)| / phi(d(x, y)) over the grid pair set.

    ``pairs`` is "all", "dyadic", or "auto" (all pairs up to 1024 samples).
    """
    periodic = isinstance(f, PeriodicField)
    s = np.asarray(f.samples, dtype=float)
    n = s.size
    if n < 2:
        raise ValueError("seminorm needs at least two samples")
    step = f.h if periodic else f.dx
    coords = f.xi if periodic else f.x
    dyadic = pairs == "dyadic" or (pairs == "auto" and n > ALL_PAIRS_MAX)
    best, wit, count = 0.0, (float(coords[0]), float(coords[0])), 0
    for k in _separations(n, periodic, dyadic):
        if periodic:
            diff = np.abs(s - np.roll(s, -k))
            if 2 * k == n:
                diff = diff[: n // 2]
            d = min(k, n - k) * step
        else:
            diff = np.abs(s[k:] - s[:-k])
            d = k * step
        count += diff.size
        i = int(np.argmax(diff))
        v = diff[i] / m(d)
        if v > best:
            best = float(v)
            wit = (float(coords[i]), float(coords[(i + k) % n]))
    return SeminormReport(best, wit, count)


def norm_C1phi(f: PeriodicField, m: Modulus) -> float:
    fp = f.derivative()
    return float(np.max(np.abs(f.samples)) + np.max(np.abs(fp.samples))
                 + seminorm_Cphi(fp, m).value)


def interpolation_check(f, m: Modulus, theta: float = 0.4) -> CheckReport:
    """[f]_{phi^theta} <= osc(f)^(1-theta) [f]_phi^theta on the same pair set.

    The oscillation max f - min f bounds every pair difference, which makes the
    inequality hold pointwise pair by pair; osc(f) <= 2 ||f||_{C^0}.
    """
    lhs = seminorm_Cphi(f, m.power(theta)).value
    s = np.asarray(f.samples)
    osc = float(s.max() - s.min())
    rhs = osc ** (1 - theta) * seminorm_Cphi(f, m).value ** theta
    sup = float(np.max(np.abs(s)))
    slack = rhs - lhs
    passes = lhs <= rhs * (1 + 1e-12) + 1e-300
    return CheckReport("interpolation", passes, [lhs, rhs], None,
                       {"slack": slack, "theta": theta, "sup_norm": sup, "oscillation": osc})


def scaling_check(f: LineField, m: Modulus, delta: float, bound: float = 2.0) -> CheckReport:
    """Compare [f(./delta)']_phi with [f']_phi / (delta phi(delta)).

    f(./delta) is sampled on the grid scaled by delta, so the samples are those
    of f and only the coordinates shrink.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    fp = f.derivative()
    base = seminorm_Cphi(fp, m).value
    scaled_field = LineField(fp.samples / delta, f.L * delta)
    scaled = seminorm_Cphi(scaled_field, m).value
    ref = base / (delta * m(delta))
    ratio = scaled / ref if ref > 0 else 0.0
    return CheckReport("scaling", ratio <= bound, [scaled, ref], None,
                       {"ratio": ratio, "delta": delta, "bound": bound})
