"""Thin linear-programming layer over the HiGHS dual simplex shipped with scipy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

FEAS_TOL = 1e-7


class LPError(RuntimeError):
    def __init__(self, message: str, node_id: int | None = None):
        super().__init__(message if node_id is None else f"node {node_id}: {message}")
        self.node_id = node_id


class LPInfeasible(LPError):
    pass


@dataclass
class LinearProgram:
    """minimize c @ x + constant  s.t.  A_ub x <= b_ub, A_eq x = b_eq, lb <= x <= ub."""

    c: np.ndarray
    A_ub: np.ndarray | sparse.spmatrix
    b_ub: np.ndarray
    A_eq: np.ndarray | sparse.spmatrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    constant: float = 0.0

    @property
    def n_vars(self) -> int:
        return len(self.c)


@dataclass
class LPSolution:
    x: np.ndarray
    value: float


def lp_solve(lp: LinearProgram, node_id: int | None = None) -> LPSolution:
    if np.any(lp.lb > lp.ub + FEAS_TOL):
        raise LPInfeasible("empty variable box", node_id)
    res = linprog(
        lp.c,
        A_ub=lp.A_ub if len(lp.b_ub) else None,
        b_ub=lp.b_ub if len(lp.b_ub) else None,
        A_eq=lp.A_eq if len(lp.b_eq) else None,
        b_eq=lp.b_eq if len(lp.b_eq) else None,
        bounds=np.column_stack([lp.lb, np.maximum(lp.ub, lp.lb)]),
        method="highs-ds",
        options={"primal_feasibility_tolerance": FEAS_TOL, "dual_feasibility_tolerance": FEAS_TOL,
                 "presolve": True},
    )
    if res.status == 2:
        raise LPInfeasible("infeasible", node_id)
    if res.status != 0:
        raise LPError(f"HiGHS status {res.status}: {res.message}", node_id)
    return LPSolution(x=np.asarray(res.x), value=float(res.fun) + lp.constant)
