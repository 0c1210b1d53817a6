"""Exact two-layer detector placement against an attacker on a gridded threat area."""
from .coverage import CoverageTable, build_coverage, detection_prob, path_exposure, segment_circle_chord
from .estimator import DetectorPlacement, ScenarioValidationError, check_scenario
from .grid_model import (
    DetectorSpec,
    GridScenario,
    ScenarioError,
    Violation,
    cell_center,
    load_scenario,
    parse_scenario,
    serialize_scenario,
    validate_scenario,
)
from .objective import (
    ObjectiveBreakdown,
    Placement,
    expected_casualties,
    miss_product,
    paper_objective,
    success_factor,
)
from .pathing import NoPath, ThreatPath, all_paths, shortest_path, truncate_path
from .solver import SolveOptions, SolveResult, enumerate_optimal, solve_bnb

__all__ = [
    "CoverageTable", "DetectorPlacement", "DetectorSpec", "GridScenario", "NoPath",
    "ObjectiveBreakdown", "Placement", "ScenarioError", "ScenarioValidationError", "SolveOptions",
    "SolveResult", "ThreatPath", "Violation", "all_paths", "build_coverage", "cell_center",
    "check_scenario", "detection_prob", "enumerate_optimal", "expected_casualties",
    "load_scenario", "miss_product", "paper_objective", "parse_scenario", "path_exposure",
    "segment_circle_chord", "serialize_scenario", "shortest_path", "solve_bnb",
    "success_factor", "truncate_path", "validate_scenario",
]
