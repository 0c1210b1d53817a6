from .bnb import NodeRecord, branch, select_branch_variable, solve_bnb, solve_node
from .enumeration import InstanceTooLarge, enumerate_optimal, feasible_placements
from .lp import LinearProgram, LPError, LPSolution, lp_solve
from .model import PlacementModel, SolveOptions
from .relaxation import RelaxationNode, build_relaxation, interval_bound, propagate
from .result import SolveResult

__all__ = [
    "InstanceTooLarge", "LPError", "LPSolution", "LinearProgram", "NodeRecord", "PlacementModel",
    "RelaxationNode", "SolveOptions", "SolveResult", "branch", "build_relaxation",
    "enumerate_optimal", "feasible_placements", "interval_bound", "lp_solve", "propagate",
    "select_branch_variable", "solve_bnb", "solve_node",
]
