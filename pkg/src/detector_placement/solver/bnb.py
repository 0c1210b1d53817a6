"""Best-first linearized branch and bound over the binary placement variables."""
from __future__ import annotations

import heapq
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..coverage import CoverageTable
from ..grid_model import GridScenario
from ..objective import expected_casualties
from .lp import LPError, LPInfeasible, LPSolution, lp_solve
from .model import PlacementModel, SolveOptions
from .relaxation import (
    Layout,
    RelaxationNode,
    build_relaxation,
    interval_bound,
    propagate,
)
from .result import SolveResult, relative_gap

log = logging.getLogger(__name__)

INT_TOL = 1e-6
ABS_TOL = 1e-9


@dataclass(frozen=True)
class NodeRecord:
    node_id: int
    depth: int
    bound: float
    status: str
    node: RelaxationNode

    def line(self) -> str:
        return f"{self.node_id} {self.depth} {self.bound:.9g} {self.status}"


@dataclass
class NodeEval:
    bound: float
    x: np.ndarray | None
    y: np.ndarray | None
    feasible: bool = True


def solve_node(model: PlacementModel, node: RelaxationNode, opts: SolveOptions) -> NodeEval:
    """Solve the node LP, adding outer-approximation tangents at the LP point.

    Falls back to the box bound if the LP fails numerically.
    """
    node.extra_w = [[] for _ in range(model.n_pairs)]
    node.extra_v = [[] for _ in range(model.n_pairs)]
    sol: LPSolution | None = None
    layout: Layout | None = None
    for rnd in range(opts.oa_rounds + 1):
        lp, layout = build_relaxation(model, node, opts)
        try:
            sol = lp_solve(lp, node.node_id)
        except LPInfeasible:
            return NodeEval(math.inf, None, None, feasible=False)
        except LPError as exc:
            log.warning("%s; using interval bound", exc)
            return NodeEval(interval_bound(model, node), None, None)
        if rnd == opts.oa_rounds:
            break
        added = False
        for k in range(model.n_pairs):
            w, u = sol.x[layout.w(k)], sol.x[layout.u(k)]
            v, z = sol.x[layout.v(k)], sol.x[layout.z(k)]
            if u < math.exp(w) - 1e-9:
                node.extra_w[k].append(float(w))
                added = True
            if z < math.exp(v) - 1e-9:
                node.extra_v[k].append(float(v))
                added = True
        if not added:
            break
    assert sol is not None and layout is not None
    x = sol.x[: layout.n_x]
    y = sol.x[layout.n_x: layout.n_x + layout.n_y]
    return NodeEval(sol.value, x, y)


def select_branch_variable(model: PlacementModel, node: RelaxationNode,
                           x: np.ndarray | None, y: np.ndarray | None) -> tuple[str, int] | None:
    """Most fractional free binary; ties by lowest cell index, primary before secondary.

    With an integral (or missing) LP point the first free variable is returned,
    and None only when every variable is fixed.
    """
    best = None
    if x is not None and y is not None:
        for layer, vals, cells, free in (("x", x, model.primary_cells, node.free_x()),
                                         ("y", y, model.secondary_cells, node.free_y())):
            for i in free:
                v = float(vals[i])
                if min(v, 1.0 - v) <= INT_TOL:
                    continue
                key = (abs(v - 0.5), cells[i], 0 if layer == "x" else 1)
                if best is None or key < best[0]:
                    best = (key, layer, int(i))
        if best is not None:
            return best[1], best[2]
    fx = node.free_x()
    if fx.size:
        return "x", int(fx[0])
    fy = node.free_y()
    if fy.size:
        return "y", int(fy[0])
    return None


def branch(model: PlacementModel, node: RelaxationNode, var: tuple[str, int],
           next_id: int) -> list[RelaxationNode]:
    """Children fixing ``var`` to 0 and 1 (in that order), infeasible ones dropped."""
    layer, i = var
    out = []
    for value, nid in ((0, next_id), (1, next_id + 1)):
        ch = node.child(nid)
        lo, hi = (ch.x_lo, ch.x_hi) if layer == "x" else (ch.y_lo, ch.y_hi)
        lo[i] = hi[i] = value
        if propagate(model, ch):
            out.append(ch)
    return out


def _round(model: PlacementModel, node: RelaxationNode, x: np.ndarray, y: np.ndarray):
    """Greedy rounding of an LP point into a feasible placement."""
    xs = np.zeros(model.n_primary)
    order = sorted(range(model.n_primary), key=lambda i: (-(x[i] + node.x_lo[i]), i))
    for i in order[: model.max_primary]:
        if node.x_hi[i] and (x[i] > INT_TOL or node.x_lo[i]):
            xs[i] = 1
    ys = np.zeros(model.n_secondary)
    if xs.any():
        blocked = {j for i, j in model.shared if xs[i]}
        order = sorted(range(model.n_secondary), key=lambda j: (-(y[j] + node.y_lo[j]), j))
        taken = 0
        for j in order:
            if taken == model.max_secondary:
                break
            if j in blocked or not node.y_hi[j] or not (y[j] > INT_TOL or node.y_lo[j]):
                continue
            ys[j] = 1
            taken += 1
    return xs, ys


class _Incumbent:
    def __init__(self, model: PlacementModel):
        self.model = model
        self.x = np.zeros(model.n_primary)
        self.y = np.zeros(model.n_secondary)
        self.value = model.evaluate(self.x, self.y)
        self.key = model.placement(self.x, self.y).key()

    def offer(self, x: np.ndarray, y: np.ndarray) -> bool:
        x = np.round(x)
        y = np.round(y)
        if not self.model.is_feasible(x, y):
            return False
        val = self.model.evaluate(x, y)
        key = self.model.placement(x, y).key()
        if val < self.value - 1e-12 or (abs(val - self.value) <= 1e-12 and key < self.key):
            self.x, self.y, self.value, self.key = x, y, val, key
            return True
        return False


def _integral(node: RelaxationNode, x: np.ndarray, y: np.ndarray) -> bool:
    fx, fy = node.free_x(), node.free_y()
    return all(min(x[i], 1 - x[i]) <= INT_TOL for i in fx) and all(
        min(y[i], 1 - y[i]) <= INT_TOL for i in fy)


def solve_bnb(s: GridScenario, cov: CoverageTable, opts: SolveOptions | None = None,
              trace: Callable[[NodeRecord], None] | None = None,
              model: PlacementModel | None = None) -> SolveResult:
    opts = opts or SolveOptions()
    model = model or PlacementModel.build(s, cov)
    started = time.monotonic()
    inc = _Incumbent(model)
    pool = ThreadPoolExecutor(max_workers=opts.parallel_nodes) if opts.parallel_nodes > 1 else None

    def emit(node: RelaxationNode, status: str) -> None:
        if trace is not None:
            trace(NodeRecord(node.node_id, node.depth, node.bound, status, node))

    def threshold() -> float:
        return inc.value - max(opts.gap_tolerance * abs(inc.value), ABS_TOL)

    def evaluate(nodes: list[RelaxationNode]) -> list[NodeEval]:
        if pool is not None and len(nodes) > 1:
            return list(pool.map(lambda n: solve_node(model, n, opts), nodes))
        return [solve_node(model, n, opts) for n in nodes]

    def absorb(node: RelaxationNode, ev: NodeEval) -> None:
        node.bound = max(node.bound, ev.bound)
        if ev.x is not None:
            if _integral(node, ev.x, ev.y):
                inc.offer(ev.x, ev.y)
            else:
                inc.offer(*_round(model, node, ev.x, ev.y))

    root = RelaxationNode.root(model)
    heap: list[tuple[float, int, RelaxationNode, NodeEval]] = []
    next_id = 1
    nodes_explored = 0
    status = "Optimal"
    try:
        if not propagate(model, root):
            status = "Infeasible"
            return SolveResult(model.placement(inc.x, inc.y), math.inf, math.inf, 0.0, 0, status)
        ev = evaluate([root])[0]
        if ev.feasible:
            absorb(root, ev)
            heapq.heappush(heap, (root.bound, root.node_id, root, ev))
        while heap:
            bound, _, node, ev = heap[0]
            if bound >= threshold():
                break
            heapq.heappop(heap)
            if nodes_explored >= opts.node_limit:
                heapq.heappush(heap, (bound, node.node_id, node, ev))
                status = "NodeLimit"
                break
            if opts.time_limit is not None and time.monotonic() - started > opts.time_limit:
                heapq.heappush(heap, (bound, node.node_id, node, ev))
                status = "TimeLimit"
                break
            nodes_explored += 1
            if ev.x is not None and _integral(node, ev.x, ev.y):
                exact = model.evaluate(np.round(ev.x), np.round(ev.y))
                if node.bound >= exact - ABS_TOL or node.is_leaf():
                    emit(node, "integral")
                    continue
                var = select_branch_variable(model, node, None, None)
            else:
                var = select_branch_variable(model, node, ev.x, ev.y)
            if var is None:
                emit(node, "leaf")
                continue
            children = branch(model, node, var, next_id)
            next_id += 2
            cells = model.primary_cells if var[0] == "x" else model.secondary_cells
            emit(node, f"branch {var[0].upper()}{cells[var[1]]}")
            for ch, ch_ev in zip(children, evaluate(children)):
                if not ch_ev.feasible:
                    emit(ch, "infeasible")
                    continue
                absorb(ch, ch_ev)
                if ch.bound < threshold():
                    heapq.heappush(heap, (ch.bound, ch.node_id, ch, ch_ev))
                else:
                    emit(ch, "pruned")
    finally:
        if pool is not None:
            pool.shutdown()

    placement = model.placement(inc.x, inc.y)
    objective = expected_casualties(s, cov, placement).expected_casualties
    lower = min([objective] + [b for b, *_ in heap])
    if status == "Optimal" and objective - lower > ABS_TOL:
        status = "GapReached"
    return SolveResult(placement, objective, lower, relative_gap(objective, lower),
                       nodes_explored, status)
