"""Two-point fields built from difference quotients of line fields."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..fields import LineField
from .line import far_nodes, node_coords


class TwoPointField:
    """g(x, y) = F(Q[f_1](x, y), ..., Q[f_l](x, y)) with F applied pointwise.

    Q[f](x, y) = (f(x) - f(y))/(x - y) and Q[f](x, x) = f'(x), so the diagonal
    of g is F applied to the derivatives. All fields share one grid; outside
    the window they are zero.
    """

    def __init__(self, fields: Sequence[LineField], F: Callable[[list], np.ndarray], label: str = ""):
        self.fields = list(fields)
        self.F = F
        self.label = label
        if self.fields:
            L, M = self.fields[0].L, self.fields[0].M
            if any(f.L != L or f.M != M for f in self.fields):
                raise ValueError("two-point field components must share a grid")
            self._vals = np.array([np.concatenate([f.samples, [0.0]]) for f in self.fields])
            self._ders = np.array([np.concatenate([f.derivative().samples, [0.0]]) for f in self.fields])

    @property
    def L(self):
        return self.fields[0].L

    @property
    def M(self):
        return self.fields[0].M

    def _q(self, fx, fy, dx_, x, y, diag):
        with np.errstate(divide="ignore", invalid="ignore"):
            qs = (fx - fy) / (x - y)
        if np.any(diag):
            qs = np.where(diag, dx_, qs)
        return qs

    def _apply(self, qlist, shape):
        out = self.F(qlist)
        return np.broadcast_to(out, shape).astype(float, copy=True)

    def nodes(self, i, j) -> np.ndarray:
        """g at node pairs (x_i, y_j); i and j broadcast (node M is +L)."""
        i = np.asarray(i)
        j = np.asarray(j)
        i, j = np.broadcast_arrays(i, j)
        if not self.fields:
            return self._apply([], i.shape)
        xs = node_coords(self.L, self.M)
        diag = i == j
        qs = [self._q(v[i], v[j], d[i], xs[i], xs[j], diag) for v, d in zip(self._vals, self._ders)]
        return self._apply(qs, i.shape)

    def nodes_far(self, i, y) -> np.ndarray:
        """g at (x_i, y) for y outside the window, where the fields vanish."""
        i = np.asarray(i)
        y = np.asarray(y, dtype=float)
        i, y = np.broadcast_arrays(i, y)
        if not self.fields:
            return self._apply([], i.shape)
        xs = node_coords(self.L, self.M)
        qs = [v[i] / (xs[i] - y) for v in self._vals]
        return self._apply(qs, i.shape)

    def far_nodes(self, x, j) -> np.ndarray:
        """g at (x, y_j) for x outside the window."""
        x = np.asarray(x, dtype=float)
        j = np.asarray(j)
        x, j = np.broadcast_arrays(x, j)
        if not self.fields:
            return self._apply([], j.shape)
        xs = node_coords(self.L, self.M)
        qs = [-v[j] / (x - xs[j]) for v in self._vals]
        return self._apply(qs, j.shape)

    def __call__(self, x, y) -> np.ndarray:
        """g at arbitrary points (linear interpolation of the fields between nodes)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        if not self.fields:
            return self._apply([], x.shape)
        diag = x == y
        qs = []
        for f in self.fields:
            d = f.derivative()
            qs.append(self._q(f(x), f(y), d(x), x, y, diag))
        return self._apply(qs, x.shape)

    def diag(self) -> np.ndarray:
        """g(x_i, x_i) at all M+1 nodes."""
        i = np.arange(self.M + 1)
        return self.nodes(i, i)

    def far_matrix(self, rows) -> np.ndarray:
        """g(x_i, y_q) for the far nodes, shape (len(rows), 2 n_far)."""
        yq, _ = far_nodes(self.L)
        return self.nodes_far(np.asarray(rows)[:, None], yq[None, :])


def q_product(fields: Sequence[LineField], powers: Sequence[int]) -> TwoPointField:
    """Pi Q[f_k]^{n_k}; its diagonal is Pi f_k'^{n_k}."""
    powers = tuple(int(p) for p in powers)
    if len(powers) != len(fields) or any(p < 0 for p in powers):
        raise ValueError("powers must be nonnegative, one per field")

    def F(qs):
        out = 1.0
        for q, p in zip(qs, powers):
            if p:
                out = out * q ** p
        return out

    return TwoPointField(fields, F, f"PiQ{powers}")


def diff_quotient(f: LineField) -> TwoPointField:
    return q_product([f], (1,))


def constant(c: float, like: LineField) -> TwoPointField:
    """The constant two-point field on the grid of ``like``."""
    tp = TwoPointField([like], lambda qs: c, f"const({c})")
    return tp
