"""Operator identities on the line, each evaluated along two independent paths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..fields import LineField
from .line import (
    Sampled,
    cauchy_sum,
    compact_sampled,
    decay_tail_bound,
    far_nodes,
    far_tail,
    hilbert_line_nodes,
    hilbert_sampled,
    node_coords,
    pv_window_nodes,
    sampled_hilbert,
    trap_weights,
    window_log,
)
from .twopoint import TwoPointField, q_product


class IdentityViolation(RuntimeError):
    pass


class RecursionDepthError(RuntimeError):
    pass


@dataclass
class DualPath:
    """Result of an identity evaluated two ways; ``value`` is the returned path."""

    value: LineField
    other: LineField
    residual: float
    extra: dict = field(default_factory=dict)


def _check_region(L: float, M: int, x_check: float | None):
    x = node_coords(L, M)
    xc = 0.5 * L if x_check is None else x_check
    return np.abs(x) <= xc


def _node_values(f: LineField) -> np.ndarray:
    return np.concatenate([f.samples, [0.0]])


def _to_field(v: np.ndarray, L: float) -> LineField:
    return LineField(v[:-1], L)


def pv_two_point(G_rows, G_diag: np.ndarray, L: float, M: int, rows=None, G_far=None,
                 chunk: int = 256) -> np.ndarray:
    """PV int G(x_i, y)/(x_i - y) dy at node targets (no 1/pi).

    G_rows(r) returns G at (x_r, y_j) for all nodes j, shape (len(r), M+1);
    G_far(r) returns G at (x_r, far nodes) or None when G vanishes off the window.
    """
    y = node_coords(L, M)
    dx = 2 * L / M
    w = trap_weights(M, dx)
    lam = window_log(L, M)
    rows = np.arange(M + 1) if rows is None else np.asarray(rows)
    out = np.empty(rows.size)
    for s in range(0, rows.size, chunk):
        r = rows[s:s + chunk]
        G = G_rows(r)
        gi = G_diag[r]
        with np.errstate(divide="ignore"):
            inv = 1.0 / (y[r][:, None] - y[None, :])
        inv[np.arange(r.size), r] = 0.0
        S = np.sum((G - gi[:, None]) * w[None, :] * inv, axis=1)
        rp = np.minimum(r + 1, M)
        rm = np.maximum(r - 1, 0)
        k = np.arange(r.size)
        dG = (G[k, rp] - G[k, rm]) / ((rp - rm) * dx)
        res = S - w[r] * dG + gi * lam[r]
        if G_far is not None:
            res = res + far_tail(y[r], G_far(r), L)
        out[s:s + chunk] = res
    return out


def _regular_at(G_at, xs: np.ndarray, L: float, M: int) -> np.ndarray:
    """int over the window of G(x, y_j)/(x - y_j) for off-window targets x."""
    y = node_coords(L, M)
    w = trap_weights(M, 2 * L / M)
    j = np.arange(M + 1)
    G = G_at(xs[:, None], j[None, :])
    return np.sum(G * w[None, :] / (xs[:, None] - y[None, :]), axis=1)


# --- Cotlar and the product formula ------------------------------------------

@dataclass
class CotlarReport:
    residual: float
    tail_bound: float
    tail_contribution: float
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)


def cotlar_residual(f: LineField, g: LineField, x_check: float | None = None) -> CotlarReport:
    """max |H[fg] - (H[f] g + f H[g] + H[H[f] H[g]])| over the check region.

    The outer transform of the non-compact product H[f]H[g] is the window
    quadrature plus the far-field quadrature; the far part is reported together
    with the a-priori bound from the 1/x decay of H[f] and H[g].
    """
    Hf, Hg = sampled_hilbert(f), sampled_hilbert(g)
    fv, gv = _node_values(f), _node_values(g)
    lhs = hilbert_line_nodes(f * g)
    prod = Hf * Hg
    outer = hilbert_sampled(prod)
    rhs = Hf.nodes * gv + fv * Hg.nodes + outer
    m = _check_region(f.L, f.M, x_check)
    far_part = far_tail(prod.x, np.broadcast_to(prod.far, (prod.M + 1, prod.far.size)), f.L) / np.pi
    xa = float(np.max(np.abs(prod.x[m])))
    return CotlarReport(float(np.max(np.abs(lhs[m] - rhs[m]))),
                        decay_tail_bound([f, g], f.L, xa),
                        float(np.max(np.abs(far_part[m]))), lhs, rhs)


def product_formula_nodes(f: LineField, g: LineField) -> np.ndarray:
    """(1/pi) PV int (Hf(x) - Hf(y))(Hg(x) - Hg(y))/(x - y) dy at the window nodes."""
    A, B = sampled_hilbert(f), sampled_hilbert(g)
    L, M = f.L, f.M
    dx = 2 * L / M
    w = trap_weights(M, dx)
    a, b = A.nodes, B.nodes
    n = M + 1
    win = (a * b * cauchy_sum(w, dx, 0, n) - a * cauchy_sum(w * b, dx, 0, n)
           - b * cauchy_sum(w * a, dx, 0, n) + cauchy_sum(w * a * b, dx, 0, n))
    Gfar = (a[:, None] - A.far[None, :]) * (b[:, None] - B.far[None, :])
    tail = far_tail(A.x, Gfar, L)
    return (win + tail) / np.pi


def product_formula_Hfg(f: LineField, g: LineField) -> LineField:
    return _to_field(product_formula_nodes(f, g), f.L)


def product_formula_residual(f: LineField, g: LineField, x_check: float | None = None) -> float:
    p = product_formula_nodes(f, g)
    d = hilbert_line_nodes(f * g)
    m = _check_region(f.L, f.M, x_check)
    return float(np.max(np.abs(p[m] - d[m])))


# --- A[f, g] -------------------------------------------------------------------

def op_A(f: LineField, g: TwoPointField, tol: float = 1e-3, x_check: float | None = None) -> DualPath:
    """A[f, g](x) = (1/pi) PV int f(y) g(x, y)/(x - y) dy.

    Path (i) is the direct two-point quadrature. Path (ii) is
    f(x) H_2[g](x, x) + H[f](x) g(x, x) + (1/pi) int (f(y) - f(x))(g(x, y) - g(x, x))/(x - y) dy,
    which is what is returned.
    """
    L, M = f.L, f.M
    fv = _node_values(f)
    gd = g.diag()
    j = np.arange(M + 1)

    direct = pv_two_point(lambda r: fv[None, :] * g.nodes(r[:, None], j[None, :]), fv * gd, L, M) / np.pi

    H2 = pv_two_point(lambda r: g.nodes(r[:, None], j[None, :]), gd, L, M, G_far=g.far_matrix) / np.pi
    Hf = hilbert_line_nodes(f)
    y = node_coords(L, M)
    w = trap_weights(M, 2 * L / M)
    R = np.empty(M + 1)
    for s in range(0, M + 1, 256):
        r = j[s:s + 256]
        G = g.nodes(r[:, None], j[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            I = (fv[None, :] - fv[r][:, None]) * (G - gd[r][:, None]) / (y[r][:, None] - y[None, :])
        I[np.arange(r.size), r] = 0.0
        R[s:s + 256] = I @ w
    Gfar = -fv[:, None] * (g.far_matrix(j) - gd[:, None])
    R = R + far_tail(y, Gfar, L)
    decomp = fv * H2 + Hf * gd + R / np.pi

    m = _check_region(L, M, x_check)
    res = float(np.max(np.abs(decomp[m] - direct[m])))
    scale = max(1.0, float(np.max(np.abs(direct[m]))))
    if res > tol * scale:
        raise IdentityViolation(f"A[f,g] paths differ by {res:.3e}")
    return DualPath(_to_field(decomp, L), _to_field(direct, L), res)


# --- T operators and the H[T] recursion ---------------------------------------

def _validate_T(j, powers, fields):
    l = len(fields)
    powers = tuple(int(p) for p in powers)
    if len(powers) != l or any(p < 0 for p in powers):
        raise ValueError("need one nonnegative power per component")
    if not 0 <= j <= l:
        raise ValueError(f"index j must lie in 0..{l}")
    if j == 0 and sum(powers) == 0:
        raise ValueError("T_0 with all powers zero is a PV at infinity and is rejected")
    return powers


class TContext:
    """Caches the T operators, their transforms and the N matrices for one field vector."""

    def __init__(self, fields, max_depth: int = 6, convention: str = "derived"):
        self.fields = list(fields)
        self.L, self.M = self.fields[0].L, self.fields[0].M
        self.max_depth = max_depth
        if convention not in ("derived", "printed"):
            raise ValueError("convention must be 'derived' or 'printed'")
        self.convention = convention
        self.derivs = [f.derivative() for f in self.fields]
        self._T, self._HTd, self._HTf = {}, {}, {}
        self._N_key, self._N = None, None

    def _weight(self, j):
        return None if j == 0 else _node_values(self.derivs[j - 1])

    def T(self, j, powers) -> Sampled:
        powers = _validate_T(j, powers, self.fields)
        key = (j, powers)
        if key in self._T:
            return self._T[key]
        L, M = self.L, self.M
        tp = q_product(self.fields, powers)
        jj = np.arange(M + 1)
        a = self._weight(j)
        if a is None:
            nodes = pv_two_point(lambda r: tp.nodes(r[:, None], jj[None, :]), tp.diag(), L, M,
                                 G_far=tp.far_matrix)
            at = tp.far_nodes
        else:
            nodes = pv_two_point(lambda r: a[None, :] * tp.nodes(r[:, None], jj[None, :]),
                                 a * tp.diag(), L, M)

            def at(x, jx):
                return a[jx] * tp.far_nodes(x, jx)
        yq, _ = far_nodes(L)
        far = _regular_at(at, yq, L, M)
        out = Sampled(L, nodes, far)
        self._T[key] = out
        return out

    def HT_direct(self, j, powers) -> np.ndarray:
        powers = _validate_T(j, powers, self.fields)
        key = (j, powers)
        if key not in self._HTd:
            self._HTd[key] = hilbert_sampled(self.T(j, powers))
        return self._HTd[key]

    def N_matrix(self, powers):
        """N(x, z) = H_1[Pi Q](x, z) for node x, z and for z at the far nodes."""
        if self._N_key == powers:
            return self._N
        L, M = self.L, self.M
        tp = q_product(self.fields, powers)
        nodes = np.arange(M + 1)
        yq, Wq = far_nodes(L)
        Kfar = Wq[None, :] / (node_coords(L, M)[:, None] - yq[None, :])
        N = np.empty((M + 1, M + 1))
        for s in range(0, M + 1, 512):
            z = nodes[s:s + 512]
            G = tp.nodes(nodes[:, None], z[None, :])
            N[:, s:s + 512] = pv_window_nodes(G, L)
            Gf = tp.far_nodes(yq[:, None], z[None, :])
            N[:, s:s + 512] += Kfar @ Gf
        Gz = tp.nodes_far(nodes[:, None], yq[None, :])
        Nfar = pv_window_nodes(Gz, L)
        self._N_key, self._N = powers, (N / np.pi, Nfar / np.pi)
        return self._N

    def J_rem(self, j, powers) -> np.ndarray:
        """int Q[f_j'](x, z) (N(x, x) - N(x, z)) dz at the nodes."""
        N, Nfar = self.N_matrix(powers)
        L, M = self.L, self.M
        a = _node_values(self.derivs[j - 1])
        y = node_coords(L, M)
        w = trap_weights(M, 2 * L / M)
        nd = np.diag(N)
        out = np.empty(M + 1)
        for s in range(0, M + 1, 512):
            r = np.arange(s, min(s + 512, M + 1))
            with np.errstate(divide="ignore", invalid="ignore"):
                Qa = (a[r][:, None] - a[None, :]) / (y[r][:, None] - y[None, :])
            Qa[np.arange(r.size), r] = 0.0
            out[r] = np.sum(Qa * (nd[r][:, None] - N[r]) * w[None, :], axis=1)
        yq, Wq = far_nodes(L)
        Qf = a[:, None] / (y[:, None] - yq[None, :])
        out += np.sum(Wq[None, :] * Qf * (nd[:, None] - Nfar), axis=1)
        return out

    def HT_formula(self, j, powers, depth: int = 0) -> np.ndarray:
        powers = _validate_T(j, powers, self.fields)
        n = sum(powers)
        if n > self.max_depth:
            raise RecursionDepthError(f"recursion depth {n} exceeds {self.max_depth}")
        key = (j, powers)
        if key in self._HTf:
            return self._HTf[key]
        if n == 0:
            out = self.HT_direct(j, powers)
            self._HTf[key] = out
            return out
        lower = []
        for k, nk in enumerate(powers, start=1):
            if nk:
                p = list(powers)
                p[k - 1] -= 1
                lower.append((k, nk / n, tuple(p)))
        if j == 0:
            out = sum(c * self.HT_formula(k, p, depth + 1) for k, c, p in lower)
        else:
            a = _node_values(self.derivs[j - 1])
            S1 = sum(c * pv_window_nodes(a * self.T(k, p).nodes, self.L) / np.pi for k, c, p in lower)
            S2 = sum(c * self.HT_formula(k, p, depth + 1) for k, c, p in lower)
            Ha = hilbert_line_nodes(self.derivs[j - 1])
            T0 = self.T(0, powers).nodes
            J = self.J_rem(j, powers)
            if self.convention == "derived":
                out = -S1 + 2 * a * S2 + Ha * T0 + J
            else:
                out = S1 - 2 * a * S2 + Ha * T0 + J / np.pi
        self._HTf[key] = out
        return out


def op_T(j: int, powers, f) -> LineField:
    """T_0 = PV int PiQ/(x - y) dy, T_j = PV int f_j'(y) PiQ/(x - y) dy (no 1/pi)."""
    ctx = TContext(f)
    return _to_field(ctx.T(j, powers).nodes, ctx.L)


def op_HT_recursion(j: int, powers, f, max_depth: int = 6, convention: str = "derived",
                    x_check: float | None = None, ctx: TContext | None = None) -> DualPath:
    """H[T_j] by the recursion, cross-checked against the direct transform of T_j."""
    ctx = TContext(f, max_depth, convention) if ctx is None else ctx
    formula = ctx.HT_formula(j, powers)
    direct = ctx.HT_direct(j, powers)
    m = _check_region(ctx.L, ctx.M, x_check)
    res = float(np.max(np.abs(formula[m] - direct[m])))
    return DualPath(_to_field(formula, ctx.L), _to_field(direct, ctx.L), res)


# --- the product-of-quotients identity ------------------------------------------

def dv_of_PiQ_check(powers, funcs, pairs, h: float = 1e-3) -> float:
    """Max residual of PiQ/(y - z) = sum (n_k/n) f_k'(y) PiQ^{-e_k}/(y - z) - (1/n) d_y PiQ.

    ``funcs`` is a list of (f, f') callables; d_y uses a centered difference of step h.
    """
    powers = tuple(int(p) for p in powers)
    n = sum(powers)
    if n < 1:
        raise ValueError("need n >= 1")
    pairs = np.asarray(pairs, dtype=float)
    y, z = pairs[:, 0], pairs[:, 1]
    if np.any(y == z):
        raise ValueError("pairs must be off the diagonal")

    def piq(yy, p):
        out = np.ones_like(yy)
        for (f, _), nk in zip(funcs, p):
            if nk:
                out = out * ((f(yy) - f(z)) / (yy - z)) ** nk
        return out

    lhs = piq(y, powers) / (y - z)
    rhs = -(piq(y + h, powers) - piq(y - h, powers)) / (2 * h) / n
    for k, ((_, df), nk) in enumerate(zip(funcs, powers)):
        if nk:
            p = list(powers)
            p[k] -= 1
            rhs = rhs + (nk / n) * df(y) * piq(y, p) / (y - z)
    return float(np.max(np.abs(lhs - rhs)))


# --- powers ---------------------------------------------------------------------

def hilbert_power_norms(f: LineField, m, n_values=range(1, 7), pairs: str = "auto") -> dict:
    """||H[f^n]||_{C^phi} = sup |H[f^n]| + [H[f^n]]_phi on the extended grid, with successive ratios."""
    from ..moduli import seminorm_Cphi
    from .line import hilbert_line

    ns = list(n_values)
    norms = []
    for n in ns:
        H = hilbert_line(f ** n)
        norms.append(float(np.max(np.abs(H.samples)) + seminorm_Cphi(H, m, pairs).value))
    ratios = [norms[k + 1] / norms[k] for k in range(len(ns) - 1)]
    return {"n": ns, "norms": norms, "ratios": ratios}
