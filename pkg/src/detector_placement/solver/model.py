"""Dense array form of a placement instance shared by the solvers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..coverage import CoverageTable
from ..grid_model import GridScenario
from ..objective import Placement


@dataclass(frozen=True)
class SolveOptions:
    gap_tolerance: float = 1e-6
    node_limit: int = 10_000_000
    mccormick_partitions: int = 4
    tangent_breakpoints: int = 4
    time_limit: float | None = None
    parallel_nodes: int = 1
    oa_rounds: int = 1

    def __post_init__(self):
        if not self.gap_tolerance > 0:
            raise ValueError("gap_tolerance must be > 0")
        if self.mccormick_partitions < 1:
            raise ValueError("mccormick_partitions must be >= 1")
        if self.tangent_breakpoints < 1:
            raise ValueError("tangent_breakpoints must be >= 1")
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")
        if self.parallel_nodes < 1:
            raise ValueError("parallel_nodes must be >= 1")
        if self.oa_rounds < 0:
            raise ValueError("oa_rounds must be >= 0")


@dataclass(frozen=True, eq=False)
class PlacementModel:
    """Candidate cells, pair weights and log-miss coefficients as arrays.

    ``log_miss_p[i, k]`` is ``ln(1 - rho)`` for primary candidate ``i`` on
    pair ``k`` (zero when the cell cannot see that pair).
    """

    primary_cells: tuple[int, ...]
    secondary_cells: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    weight: np.ndarray
    log_miss_p: np.ndarray
    log_miss_s: np.ndarray
    theta1: float
    theta2: float
    max_primary: int
    max_secondary: int
    shared: tuple[tuple[int, int], ...]

    @classmethod
    def build(cls, s: GridScenario, cov: CoverageTable) -> "PlacementModel":
        prim = tuple(sorted(cov.candidates_P))
        sec = tuple(sorted(cov.candidates_S))
        pairs = tuple(s.positive_pairs())
        zeta = s.zeta
        weight = np.array([zeta[j] * s.gamma[(e, j)] for e, j in pairs], dtype=float)
        a = np.zeros((len(prim), len(pairs)))
        b = np.zeros((len(sec), len(pairs)))
        pi = {c: n for n, c in enumerate(prim)}
        si = {c: n for n, c in enumerate(sec)}
        for k, (e, j) in enumerate(pairs):
            for i in cov.eligible_primary.get((e, j), ()):
                a[pi[i], k] = math.log1p(-cov.rho_primary[(i, e, j)])
            for i in cov.eligible_secondary.get((e, j), ()):
                b[si[i], k] = math.log1p(-cov.rho_secondary[(i, e, j)])
        return cls(
            primary_cells=prim,
            secondary_cells=sec,
            pairs=pairs,
            weight=weight,
            log_miss_p=a,
            log_miss_s=b,
            theta1=s.theta1,
            theta2=s.theta2,
            max_primary=s.primary_spec.max_count,
            max_secondary=s.secondary_spec.max_count,
            shared=tuple((pi[c], si[c]) for c in prim if c in si),
        )

    @property
    def n_primary(self) -> int:
        return len(self.primary_cells)

    @property
    def n_secondary(self) -> int:
        return len(self.secondary_cells)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weight)

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> float:
        """Expected casualties of the 0/1 vectors ``x`` (primary) and ``y`` (secondary)."""
        q_p = np.exp(np.asarray(x, dtype=float) @ self.log_miss_p)
        q_s = np.exp(np.asarray(y, dtype=float) @ self.log_miss_s)
        factor = 1.0 - self.theta1 * (1 - q_p) * (1 - q_s) - self.theta2 * q_p * (1 - q_s)
        return math.fsum(self.weight * factor)

    def placement(self, x: np.ndarray, y: np.ndarray) -> Placement:
        return Placement.of(
            (c for c, v in zip(self.primary_cells, x) if v > 0.5),
            (c for c, v in zip(self.secondary_cells, y) if v > 0.5),
        )

    def vectors(self, pl: Placement) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([c in pl.primary for c in self.primary_cells], dtype=float)
        y = np.array([c in pl.secondary for c in self.secondary_cells], dtype=float)
        return x, y

    def is_feasible(self, x: Iterable[float], y: Iterable[float]) -> bool:
        x = np.asarray(list(x))
        y = np.asarray(list(y))
        if x.sum() > self.max_primary or y.sum() > self.max_secondary:
            return False
        if y.any() and not x.any():
            return False
        return not any(x[i] and y[j] for i, j in self.shared)
