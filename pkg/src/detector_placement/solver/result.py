from __future__ import annotations

from dataclasses import dataclass

from ..objective import Placement

STATUSES = ("Optimal", "GapReached", "NodeLimit", "TimeLimit", "Infeasible")


@dataclass(frozen=True)
class SolveResult:
    placement: Placement
    objective: float
    lower_bound: float
    relative_gap: float
    nodes_explored: int
    status: str

    def to_dict(self) -> dict:
        return {
            "placement": self.placement.to_dict(),
            "objective": self.objective,
            "lower_bound": self.lower_bound,
            "relative_gap": self.relative_gap,
            "nodes_explored": self.nodes_explored,
            "status": self.status,
        }


def relative_gap(objective: float, lower_bound: float) -> float:
    return max(0.0, objective - lower_bound) / max(abs(objective), 1e-12)
