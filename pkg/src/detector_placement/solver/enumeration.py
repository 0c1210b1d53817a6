"""Brute-force optimum over every feasible placement; the reference for small instances."""
from __future__ import annotations

import itertools
import math

from ..coverage import CoverageTable
from ..grid_model import GridScenario
from ..objective import Placement, miss_product, success_factor
from .result import SolveResult

MAX_ENUMERATION_VARS = 24


class InstanceTooLarge(ValueError):
    pass


def feasible_placements(s: GridScenario, cov: CoverageTable, fixed=None):
    """Yield every placement satisfying budgets, exclusion, linking and eligibility.

    ``fixed`` optionally maps ``("x"|"y", cell) -> 0/1`` to restrict the search.
    """
    fixed = fixed or {}
    prim = sorted(cov.candidates_P)
    sec = sorted(cov.candidates_S)
    kp = s.primary_spec.max_count
    ks = s.secondary_spec.max_count
    must_x = {c for (layer, c), v in fixed.items() if layer == "x" and v == 1}
    must_y = {c for (layer, c), v in fixed.items() if layer == "y" and v == 1}
    free_x = [c for c in prim if fixed.get(("x", c)) is None]
    free_y = [c for c in sec if fixed.get(("y", c)) is None]
    for nx in range(0, kp - len(must_x) + 1):
        for xs in itertools.combinations(free_x, nx):
            X = must_x | set(xs)
            if not X:
                if must_y:
                    continue
                yield Placement.of(X, ())
                continue
            ys_pool = [c for c in free_y if c not in X]
            if must_y & X:
                continue
            for ny in range(0, ks - len(must_y) + 1):
                for ys in itertools.combinations(ys_pool, ny):
                    yield Placement.of(X, must_y | set(ys))


def enumerate_optimal(s: GridScenario, cov: CoverageTable, fixed=None) -> SolveResult:
    n_vars = len(cov.candidates_P) + len(cov.candidates_S)
    if n_vars > MAX_ENUMERATION_VARS:
        raise InstanceTooLarge(f"{n_vars} candidate variables exceed the enumeration guard "
                               f"of {MAX_ENUMERATION_VARS}")
    zeta = s.zeta
    rows = [(zeta[j] * s.gamma[(e, j)],
             cov.row_primary((e, j)) if (e, j) in cov.eligible_primary else {},
             cov.row_secondary((e, j)) if (e, j) in cov.eligible_secondary else {})
            for e, j in s.positive_pairs()]
    best_val = math.inf
    best: Placement | None = None
    count = 0
    qp_cache: dict[frozenset[int], list[float]] = {}
    for pl in feasible_placements(s, cov, fixed):
        count += 1
        q_ps = qp_cache.get(pl.primary)
        if q_ps is None:
            q_ps = qp_cache[pl.primary] = [miss_product(rp, pl.primary) for _, rp, _ in rows]
        val = math.fsum(
            w * success_factor(q_p, miss_product(rs, pl.secondary), s.theta1, s.theta2)
            for (w, _, rs), q_p in zip(rows, q_ps)
        )
        if best is None or val < best_val - 1e-12 or (
                abs(val - best_val) <= 1e-12 and pl.key() < best.key()):
            best_val, best = val, pl
    if best is None:
        return SolveResult(Placement(), math.inf, math.inf, 0.0, count, "Infeasible")
    return SolveResult(best, best_val, best_val, 0.0, count, "Optimal")
