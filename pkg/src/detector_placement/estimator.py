"""Estimator-style front end: configure once, ``fit`` on a scenario, read ``placement_``."""
from __future__ import annotations

import json
import os
from typing import Any

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .coverage import CoverageTable, build_coverage
from .grid_model import (
    GridScenario,
    Violation,
    load_scenario,
    one_layer,
    scenario_from_dict,
    validate_scenario,
)
from .objective import ObjectiveBreakdown, expected_casualties
from .pathing import all_paths
from .solver import SolveOptions, enumerate_optimal, solve_bnb


class ScenarioValidationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        lines = "; ".join(v.message for v in violations)
        super().__init__(f"invalid scenario: {lines}")


def check_scenario(scenario: Any) -> GridScenario:
    """Accept a GridScenario, a decoded document, a JSON string or a file path; validate it."""
    if isinstance(scenario, GridScenario):
        s = scenario
    elif isinstance(scenario, dict):
        s = scenario_from_dict(scenario)
    elif isinstance(scenario, (str, os.PathLike)):
        text = str(scenario)
        s = scenario_from_dict(json.loads(text)) if text.lstrip().startswith("{") else load_scenario(text)
    else:
        raise TypeError(f"cannot interpret {type(scenario).__name__} as a scenario")
    violations = validate_scenario(s)
    if violations:
        raise ScenarioValidationError(violations)
    return s


class DetectorPlacement(BaseEstimator):
    """Optimal primary/secondary detector placement for a grid scenario.

    Parameters mirror :class:`SolveOptions`; ``method`` selects the
    branch-and-bound engine (``"bnb"``) or brute-force enumeration
    (``"enumerate"``, small instances only). ``one_layer=True`` solves with the
    secondary budget forced to zero.

    Attributes set by ``fit``: ``scenario_``, ``paths_``, ``coverage_``,
    ``result_``, ``placement_``, ``breakdown_``, ``objective_``.
    """

    def __init__(self, gap_tolerance: float = 1e-6, node_limit: int = 10_000_000,
                 mccormick_partitions: int = 4, tangent_breakpoints: int = 4,
                 time_limit: float | None = None, n_jobs: int = 1, oa_rounds: int = 1,
                 method: str = "bnb", one_layer: bool = False):
        self.gap_tolerance = gap_tolerance
        self.node_limit = node_limit
        self.mccormick_partitions = mccormick_partitions
        self.tangent_breakpoints = tangent_breakpoints
        self.time_limit = time_limit
        self.n_jobs = n_jobs
        self.oa_rounds = oa_rounds
        self.method = method
        self.one_layer = one_layer

    def _options(self) -> SolveOptions:
        return SolveOptions(
            gap_tolerance=self.gap_tolerance,
            node_limit=self.node_limit,
            mccormick_partitions=self.mccormick_partitions,
            tangent_breakpoints=self.tangent_breakpoints,
            time_limit=self.time_limit,
            parallel_nodes=self.n_jobs,
            oa_rounds=self.oa_rounds,
        )

    def fit(self, scenario, y=None):
        if self.method not in ("bnb", "enumerate"):
            raise ValueError(f"unknown method {self.method!r}")
        s = check_scenario(scenario)
        if self.one_layer:
            s = one_layer(s)
        opts = self._options()
        self.scenario_ = s
        self.paths_ = all_paths(s)
        self.coverage_: CoverageTable = build_coverage(s, self.paths_)
        if self.method == "enumerate":
            self.result_ = enumerate_optimal(s, self.coverage_)
        else:
            self.result_ = solve_bnb(s, self.coverage_, opts)
        self.placement_ = self.result_.placement
        self.breakdown_: ObjectiveBreakdown = expected_casualties(s, self.coverage_, self.placement_)
        self.objective_ = self.breakdown_.expected_casualties
        return self

    def evaluate(self, scenario=None) -> ObjectiveBreakdown:
        """Expected casualties of the fitted placement, optionally on another scenario."""
        check_is_fitted(self, "placement_")
        if scenario is None:
            return self.breakdown_
        s = check_scenario(scenario)
        cov = build_coverage(s, all_paths(s))
        return expected_casualties(s, cov, self.placement_, check=False)

    def score(self, scenario=None, y=None) -> float:
        """Negated expected casualties (greater is better)."""
        return -self.evaluate(scenario).expected_casualties
