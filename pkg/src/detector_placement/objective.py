"""Exact expected-casualty evaluation of a detector placement.

For one entrance/target pair let ``Qp`` and ``Qs`` be the probabilities that
the primary and the secondary layer miss the attacker. Neutralization only
starts once a secondary detector confirms, so the attack succeeds with
probability::

    1 - theta1 * (1 - Qp) * (1 - Qs) - theta2 * Qp * (1 - Qs)

The minimized form drops the placement-independent ``(1 - theta1)`` share.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .coverage import CoverageTable
from .grid_model import GridScenario

Pair = tuple[int, int]


class IneligibleCell(ValueError):
    pass


@dataclass(frozen=True)
class Placement:
    primary: frozenset[int] = field(default_factory=frozenset)
    secondary: frozenset[int] = field(default_factory=frozenset)

    @classmethod
    def of(cls, primary: Iterable[int] = (), secondary: Iterable[int] = ()) -> "Placement":
        return cls(frozenset(primary), frozenset(secondary))

    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Ordering used to break ties between equally good placements."""
        return tuple(sorted(self.primary)), tuple(sorted(self.secondary))

    def to_dict(self) -> dict[str, list[int]]:
        return {"primary": sorted(self.primary), "secondary": sorted(self.secondary)}


@dataclass(frozen=True)
class PairTerm:
    entrance: int
    target: int
    miss_primary: float
    miss_secondary: float
    success_factor: float
    expected_casualties_term: float


@dataclass(frozen=True)
class ObjectiveBreakdown:
    terms: tuple[PairTerm, ...]
    expected_casualties: float
    paper_objective_value: float

    def to_dict(self) -> dict:
        return {
            "expected_casualties": self.expected_casualties,
            "objective_without_constant": self.paper_objective_value,
            "pairs": [
                {"entrance": t.entrance, "target": t.target, "miss_primary": t.miss_primary,
                 "miss_secondary": t.miss_secondary, "success_factor": t.success_factor,
                 "term": t.expected_casualties_term}
                for t in self.terms
            ],
        }


def miss_product(rho_row: Mapping[int, float], chosen: Iterable[int]) -> float:
    """Probability that every chosen detector in ``rho_row`` misses."""
    logs = [math.log1p(-rho_row[i]) for i in sorted(set(chosen)) if i in rho_row]
    if not logs:
        return 1.0
    return math.exp(math.fsum(logs))


def success_factor(q_p: float, q_s: float, theta1: float, theta2: float) -> float:
    return 1.0 - theta1 * (1.0 - q_p) * (1.0 - q_s) - theta2 * q_p * (1.0 - q_s)


def _reduced_factor(q_p: float, q_s: float, theta1: float, theta2: float) -> float:
    d = theta1 - theta2
    return d * q_p + theta1 * q_s - d * q_p * q_s


def _check(cov: CoverageTable, pl: Placement) -> None:
    bad = sorted((pl.primary - cov.candidates_P) | (pl.secondary - cov.candidates_S))
    if bad:
        raise IneligibleCell(f"ineligible cell(s) {bad}")


def _pair_misses(s: GridScenario, cov: CoverageTable, pl: Placement):
    for e, j in s.positive_pairs():
        pair = (e, j)
        if pair in cov.eligible_primary:
            q_p = miss_product(cov.row_primary(pair), pl.primary)
            q_s = miss_product(cov.row_secondary(pair), pl.secondary)
        else:
            q_p = q_s = 1.0
        yield e, j, q_p, q_s


def expected_casualties(s: GridScenario, cov: CoverageTable, pl: Placement,
                        check: bool = True) -> ObjectiveBreakdown:
    if check:
        _check(cov, pl)
    zeta = s.zeta
    terms = []
    reduced = []
    for e, j, q_p, q_s in _pair_misses(s, cov, pl):
        w = zeta[j] * s.gamma[(e, j)]
        f = success_factor(q_p, q_s, s.theta1, s.theta2)
        terms.append(PairTerm(e, j, q_p, q_s, f, w * f))
        reduced.append(w * _reduced_factor(q_p, q_s, s.theta1, s.theta2))
    return ObjectiveBreakdown(
        terms=tuple(terms),
        expected_casualties=math.fsum(t.expected_casualties_term for t in terms),
        paper_objective_value=math.fsum(reduced),
    )


def paper_objective(s: GridScenario, cov: CoverageTable, pl: Placement, check: bool = True) -> float:
    """Objective as minimized by the model: expected casualties minus (1-theta1)*sum(zeta*gamma)."""
    if check:
        _check(cov, pl)
    zeta = s.zeta
    return math.fsum(zeta[j] * s.gamma[(e, j)] * _reduced_factor(q_p, q_s, s.theta1, s.theta2)
                     for e, j, q_p, q_s in _pair_misses(s, cov, pl))


def constraint_violations(s: GridScenario, cov: CoverageTable, pl: Placement) -> list[str]:
    """Names of the placement constraints that ``pl`` breaks (empty when feasible)."""
    out = []
    ps, ss = s.primary_spec, s.secondary_spec
    if len(pl.primary) * ps.unit_cost_psi > ps.budget_M + 1e-9:
        out.append("primary budget")
    if len(pl.secondary) * ss.unit_cost_psi > ss.budget_M + 1e-9:
        out.append("secondary budget")
    if pl.primary & pl.secondary:
        out.append("co-located detectors")
    if pl.secondary and not pl.primary:
        out.append("secondary without primary")
    if not pl.primary <= cov.candidates_P or not pl.secondary <= cov.candidates_S:
        out.append("ineligible cell")
    return out
