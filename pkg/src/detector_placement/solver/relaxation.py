"""Linear relaxation of a branch-and-bound node.

Per entrance/target pair ``k`` the relaxation carries

* ``w = sum_i X_i ln(1 - rho_ik)`` and ``v`` likewise for ``Y``,
* ``u >= exp(w)`` and ``z >= exp(v)`` through tangent lines (plus the secant
  from above over the node's range),
* ``p <= u * z`` through a piecewise McCormick envelope over the ``u`` range
  with segment selectors relaxed to ``[0, 1]``,

and minimizes ``sum_k c_k [(1 - t1) + (t1 - t2) u + t1 z - (t1 - t2) p]``.
Every integer point of the node maps to a feasible LP point of equal value,
so the LP optimum is a valid lower bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import sparse

from .lp import LinearProgram
from .model import PlacementModel, SolveOptions


@dataclass
class RelaxationNode:
    """Fixings of one subtree. ``lo == 1`` fixes a variable to one, ``hi == 0`` to zero."""

    node_id: int
    depth: int
    x_lo: np.ndarray
    x_hi: np.ndarray
    y_lo: np.ndarray
    y_hi: np.ndarray
    bound: float = -math.inf
    parent_id: int | None = None
    extra_w: list[list[float]] = field(default_factory=list)
    extra_v: list[list[float]] = field(default_factory=list)

    @classmethod
    def root(cls, model: PlacementModel) -> "RelaxationNode":
        return cls(
            node_id=0,
            depth=0,
            x_lo=np.zeros(model.n_primary, dtype=np.int8),
            x_hi=np.ones(model.n_primary, dtype=np.int8),
            y_lo=np.zeros(model.n_secondary, dtype=np.int8),
            y_hi=np.ones(model.n_secondary, dtype=np.int8),
        )

    def child(self, node_id: int) -> "RelaxationNode":
        return RelaxationNode(
            node_id=node_id,
            depth=self.depth + 1,
            x_lo=self.x_lo.copy(),
            x_hi=self.x_hi.copy(),
            y_lo=self.y_lo.copy(),
            y_hi=self.y_hi.copy(),
            bound=self.bound,
            parent_id=self.node_id,
        )

    def free_x(self) -> np.ndarray:
        return np.flatnonzero(self.x_lo < self.x_hi)

    def free_y(self) -> np.ndarray:
        return np.flatnonzero(self.y_lo < self.y_hi)

    def is_leaf(self) -> bool:
        return not (self.free_x().size or self.free_y().size)


def propagate(model: PlacementModel, node: RelaxationNode) -> bool:
    """Tighten fixings implied by budgets, exclusion and linking; False if empty."""
    changed = True
    while changed:
        changed = False
        if np.any(node.x_lo > node.x_hi) or np.any(node.y_lo > node.y_hi):
            return False
        for lo, hi, cap in ((node.x_lo, node.x_hi, model.max_primary),
                            (node.y_lo, node.y_hi, model.max_secondary)):
            ones = int(lo.sum())
            if ones > cap:
                return False
            if ones == cap:
                drop = (lo == 0) & (hi == 1)
                if drop.any():
                    hi[drop] = 0
                    changed = True
        for i, j in model.shared:
            if node.x_lo[i] and node.y_lo[j]:
                return False
            if node.x_lo[i] and node.y_hi[j]:
                node.y_hi[j] = 0
                changed = True
            if node.y_lo[j] and node.x_hi[i]:
                node.x_hi[i] = 0
                changed = True
        if not node.x_hi.any():
            if node.y_lo.any():
                return False
            if node.y_hi.any():
                node.y_hi[:] = 0
                changed = True
    return True


def _log_range(coef: np.ndarray, lo: np.ndarray, hi: np.ndarray, cap: int) -> tuple[np.ndarray, np.ndarray]:
    """Range of ``sum_i coef[i, k] * b_i`` over 0/1 vectors within fixings and a count cap."""
    n_pairs = coef.shape[1]
    fixed = lo.astype(float) @ coef if coef.size else np.zeros(n_pairs)
    free = (lo == 0) & (hi == 1)
    room = max(cap - int(lo.sum()), 0)
    low = fixed.copy()
    if room and free.any():
        picked = np.sort(coef[free], axis=0)[:room]
        low = low + picked.sum(axis=0)
    return low, fixed


def node_ranges(model: PlacementModel, node: RelaxationNode):
    """(w_lo, w_hi, v_lo, v_hi) per pair for the node."""
    w_lo, w_hi = _log_range(model.log_miss_p, node.x_lo, node.x_hi, model.max_primary)
    v_lo, v_hi = _log_range(model.log_miss_s, node.y_lo, node.y_hi, model.max_secondary)
    return w_lo, w_hi, v_lo, v_hi


@dataclass(frozen=True)
class Layout:
    n_x: int
    n_y: int
    n_pairs: int
    n_parts: int

    @property
    def block(self) -> int:
        return 5 + 3 * self.n_parts

    @property
    def n_vars(self) -> int:
        return self.n_x + self.n_y + 1 + self.n_pairs * self.block

    def x(self, i: int) -> int:
        return i

    def y(self, i: int) -> int:
        return self.n_x + i

    @property
    def t(self) -> int:
        """Primary count variable."""
        return self.n_x + self.n_y

    def base(self, k: int) -> int:
        return self.n_x + self.n_y + 1 + k * self.block

    def w(self, k): return self.base(k)
    def v(self, k): return self.base(k) + 1
    def u(self, k): return self.base(k) + 2
    def z(self, k): return self.base(k) + 3
    def p(self, k): return self.base(k) + 4
    def lam(self, k, n): return self.base(k) + 5 + n
    def uh(self, k, n): return self.base(k) + 5 + self.n_parts + n
    def zh(self, k, n): return self.base(k) + 5 + 2 * self.n_parts + n


def breakpoints(lo: float, hi: float, count: int) -> list[float]:
    if hi - lo <= 1e-12:
        return [hi]
    return list(np.linspace(lo, hi, count))


class _Rows:
    """Sparse row accumulator (COO triplets)."""

    def __init__(self, n: int, first_row: int = 0):
        self.n = n
        self.count = first_row
        self.r: list[int] = []
        self.c: list[int] = []
        self.v: list[float] = []
        self.rhs: list[float] = []

    def add(self, entries: Sequence[tuple[int, float]], rhs: float) -> None:
        for idx, val in entries:
            self.r.append(self.count)
            self.c.append(idx)
            self.v.append(val)
        self.rhs.append(rhs)
        self.count += 1

    def extend(self, other: "_Rows") -> None:
        offset = self.count
        self.r.extend(x + offset for x in other.r)
        self.c.extend(other.c)
        self.v.extend(other.v)
        self.rhs.extend(other.rhs)
        self.count += other.count

    def matrix(self) -> tuple[sparse.csr_matrix, np.ndarray]:
        A = sparse.csr_matrix((self.v, (self.r, self.c)), shape=(self.count, self.n))
        return A, np.array(self.rhs, dtype=float)


def _exp_cuts(ub: _Rows, var_log: int, var_exp: int, lo: float, hi: float, points: Sequence[float]) -> None:
    for t in points:
        et = math.exp(t)
        # exp(t) * (1 + log - t) <= exp
        ub.add([(var_log, et), (var_exp, -1.0)], et * (t - 1.0))
    if hi - lo > 1e-12:
        slope = (math.exp(hi) - math.exp(lo)) / (hi - lo)
        ub.add([(var_exp, 1.0), (var_log, -slope)], math.exp(lo) - slope * lo)


@lru_cache(maxsize=32)
def _static_rows(model: PlacementModel, n_parts: int) -> tuple[Layout, _Rows, _Rows]:
    """Rows that do not depend on the node: budgets, exclusion, linking, log sums."""
    L = Layout(model.n_primary, model.n_secondary, model.n_pairs, n_parts)
    ub, eq = _Rows(L.n_vars), _Rows(L.n_vars)
    if L.n_x:
        ub.add([(L.x(i), 1.0) for i in range(L.n_x)], float(model.max_primary))
    if L.n_y:
        ub.add([(L.y(i), 1.0) for i in range(L.n_y)], float(model.max_secondary))
    for i, j in model.shared:
        ub.add([(L.x(i), 1.0), (L.y(j), 1.0)], 1.0)
    # Y_j <= sum(X) through the count variable t = sum(X)
    if L.n_y:
        eq.add([(L.t, 1.0)] + [(L.x(i), -1.0) for i in range(L.n_x)], 0.0)
        for j in range(L.n_y):
            ub.add([(L.y(j), 1.0), (L.t, -1.0)], 0.0)
    for k in range(L.n_pairs):
        eq.add([(L.w(k), 1.0)] + [(L.x(i), -float(model.log_miss_p[i, k]))
                                  for i in np.flatnonzero(model.log_miss_p[:, k])], 0.0)
        eq.add([(L.v(k), 1.0)] + [(L.y(i), -float(model.log_miss_s[i, k]))
                                  for i in np.flatnonzero(model.log_miss_s[:, k])], 0.0)
        eq.add([(L.lam(k, m), 1.0) for m in range(n_parts)], 1.0)
        eq.add([(L.u(k), 1.0)] + [(L.uh(k, m), -1.0) for m in range(n_parts)], 0.0)
        eq.add([(L.z(k), 1.0)] + [(L.zh(k, m), -1.0) for m in range(n_parts)], 0.0)
    return L, ub, eq


def build_relaxation(model: PlacementModel, node: RelaxationNode, opts: SolveOptions) -> tuple[LinearProgram, Layout]:
    N = opts.mccormick_partitions
    L, static_ub, static_eq = _static_rows(model, N)
    n = L.n_vars
    ub = _Rows(n)
    ub.extend(static_ub)
    lb_v = np.zeros(n)
    ub_v = np.ones(n)
    lb_v[: L.n_x] = node.x_lo
    ub_v[: L.n_x] = node.x_hi
    lb_v[L.n_x: L.n_x + L.n_y] = node.y_lo
    ub_v[L.n_x: L.n_x + L.n_y] = node.y_hi
    ub_v[L.t] = max(model.max_primary, 0)

    w_lo, w_hi, v_lo, v_hi = node_ranges(model, node)
    c = np.zeros(n)
    t1, t2 = model.theta1, model.theta2
    for k in range(L.n_pairs):
        wk, vk, uk, zk, pk = L.w(k), L.v(k), L.u(k), L.z(k), L.p(k)
        u_lo, u_hi = math.exp(w_lo[k]), math.exp(w_hi[k])
        z_lo, z_hi = math.exp(v_lo[k]), math.exp(v_hi[k])
        lb_v[wk], ub_v[wk] = w_lo[k], w_hi[k]
        lb_v[vk], ub_v[vk] = v_lo[k], v_hi[k]
        lb_v[uk], ub_v[uk] = u_lo, u_hi
        lb_v[zk], ub_v[zk] = z_lo, z_hi
        lb_v[pk], ub_v[pk] = u_lo * z_lo, u_hi * z_hi

        extra_w = node.extra_w[k] if k < len(node.extra_w) else []
        extra_v = node.extra_v[k] if k < len(node.extra_v) else []
        _exp_cuts(ub, wk, uk, w_lo[k], w_hi[k],
                  breakpoints(w_lo[k], w_hi[k], opts.tangent_breakpoints) + list(extra_w))
        _exp_cuts(ub, vk, zk, v_lo[k], v_hi[k],
                  breakpoints(v_lo[k], v_hi[k], opts.tangent_breakpoints) + list(extra_v))

        a = np.linspace(u_lo, u_hi, N + 1)
        over1: list[tuple[int, float]] = [(pk, 1.0)]
        over2: list[tuple[int, float]] = [(pk, 1.0)]
        for m in range(N):
            lam, uh, zh = L.lam(k, m), L.uh(k, m), L.zh(k, m)
            ub_v[uh], ub_v[zh] = u_hi, z_hi
            ub.add([(lam, a[m]), (uh, -1.0)], 0.0)
            ub.add([(uh, 1.0), (lam, -a[m + 1])], 0.0)
            ub.add([(lam, z_lo), (zh, -1.0)], 0.0)
            ub.add([(zh, 1.0), (lam, -z_hi)], 0.0)
            # p <= a[m+1] z + z_lo u - a[m+1] z_lo   (piece m)
            over1 += [(zh, -a[m + 1]), (uh, -z_lo), (lam, a[m + 1] * z_lo)]
            # p <= z_hi u + a[m] z - a[m] z_hi       (piece m)
            over2 += [(uh, -z_hi), (zh, -a[m]), (lam, a[m] * z_hi)]
        ub.add(over1, 0.0)
        ub.add(over2, 0.0)

        ck = model.weight[k]
        c[uk] = ck * (t1 - t2)
        c[zk] = ck * t1
        c[pk] = -ck * (t1 - t2)

    A_ub, b_ub = ub.matrix()
    A_eq, b_eq = static_eq.matrix()
    constant = (1.0 - t1) * model.total_weight
    return LinearProgram(c, A_ub, b_ub, A_eq, b_eq, lb_v, ub_v, constant), L


def interval_bound(model: PlacementModel, node: RelaxationNode) -> float:
    """Box-only lower bound used when the LP fails numerically."""
    w_lo, _, v_lo, v_hi = node_ranges(model, node)
    t1, t2 = model.theta1, model.theta2
    total = (1.0 - t1) * model.total_weight
    for k in range(model.n_pairs):
        u = math.exp(w_lo[k])
        best = min((t1 - t2) * u * (1 - z) + t1 * z for z in (math.exp(v_lo[k]), math.exp(v_hi[k])))
        total += model.weight[k] * best
    return total
