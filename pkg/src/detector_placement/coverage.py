"""Exposure geometry, detection probabilities and detector eligibility sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .grid_model import GridScenario, Point, cell_center
from .pathing import ThreatPath

EXPOSURE_EPS = 1e-9

Pair = tuple[int, int]


def segment_circle_chord(p0: Point, p1: Point, center: Point, radius: float) -> float:
    """Length of the part of segment ``p0 -> p1`` inside the disk ``(center, radius)``."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    fx, fy = p0[0] - center[0], p0[1] - center[1]
    a = dx * dx + dy * dy
    if a == 0.0 or radius <= 0.0:
        return 0.0
    b = 2.0 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return 0.0
    root = math.sqrt(disc)
    # cancellation-free pair of roots
    q = -0.5 * (b + math.copysign(root, b))
    t1, t2 = q / a, (c / q if q != 0.0 else -q / a)
    if t1 > t2:
        t1, t2 = t2, t1
    lo, hi = max(t1, 0.0), min(t2, 1.0)
    if hi <= lo:
        return 0.0
    return (hi - lo) * math.sqrt(a)


def path_exposure(polyline: Sequence[Point], center: Point, radius: float) -> float:
    return math.fsum(segment_circle_chord(a, b, center, radius)
                     for a, b in zip(polyline, polyline[1:]))


def detection_prob(beta: float, l: float) -> float:
    """Probability 1 - exp(-beta * l) that a detector with hazard ``beta`` fires."""
    return -math.expm1(-beta * l)


@dataclass(frozen=True)
class CoverageTable:
    """Positive detection probabilities keyed by (cell, entrance, target).

    Absent keys mean probability zero.
    """

    rho_primary: Mapping[tuple[int, int, int], float]
    rho_secondary: Mapping[tuple[int, int, int], float]
    eligible_primary: Mapping[Pair, frozenset[int]]
    eligible_secondary: Mapping[Pair, frozenset[int]]
    candidates_P: frozenset[int] = field(default=frozenset())
    candidates_S: frozenset[int] = field(default=frozenset())

    @property
    def pairs(self) -> list[Pair]:
        return sorted(self.eligible_primary)

    def row_primary(self, pair: Pair) -> dict[int, float]:
        e, j = pair
        return {i: self.rho_primary[(i, e, j)] for i in sorted(self.eligible_primary[pair])}

    def row_secondary(self, pair: Pair) -> dict[int, float]:
        e, j = pair
        return {i: self.rho_secondary[(i, e, j)] for i in sorted(self.eligible_secondary[pair])}


def _layer(cells: Iterable[int], centers: Mapping[int, Point], polyline: Sequence[Point],
           radius: float, beta: float) -> dict[int, float]:
    out = {}
    for i in cells:
        l = path_exposure(polyline, centers[i], radius)
        if l <= EXPOSURE_EPS:
            continue
        rho = detection_prob(beta, l)
        if rho > 0.0:
            out[i] = rho
    return out


def build_coverage(s: GridScenario, paths: Mapping[Pair, ThreatPath]) -> CoverageTable:
    cells = s.unblocked()
    centers = {i: cell_center(s, i) for i in cells}
    ps, ss = s.primary_spec, s.secondary_spec
    rho_p: dict[tuple[int, int, int], float] = {}
    rho_s: dict[tuple[int, int, int], float] = {}
    elig_p: dict[Pair, frozenset[int]] = {}
    elig_s: dict[Pair, frozenset[int]] = {}
    for pair in sorted(paths):
        e, j = pair
        path = paths[pair]
        row_p = _layer(cells, centers, path.prefix, ps.radius_alpha, ps.rate_beta)
        row_s = _layer(cells, centers, path.polyline, ss.radius_alpha, ss.rate_beta)
        rho_p.update({(i, e, j): r for i, r in row_p.items()})
        rho_s.update({(i, e, j): r for i, r in row_s.items()})
        elig_p[pair] = frozenset(row_p)
        elig_s[pair] = frozenset(row_s)
    return CoverageTable(
        rho_primary=rho_p,
        rho_secondary=rho_s,
        eligible_primary=elig_p,
        eligible_secondary=elig_s,
        candidates_P=frozenset().union(*elig_p.values()),
        candidates_S=frozenset().union(*elig_s.values()),
    )
