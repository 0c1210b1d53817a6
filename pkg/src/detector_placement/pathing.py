"""Attacker shortest paths on the 8-connected grid and their timeliness prefixes."""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

from .grid_model import GridScenario, Point, cell_center, cell_index, cell_rc

SQRT2 = math.sqrt(2.0)

# N, NE, E, SE, S, SW, W, NW as (d_row, d_col); "north" is decreasing row index
DIRECTIONS: tuple[tuple[int, int], ...] = (
    (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1),
)


class NoPath(Exception):
    def __init__(self, entrance: int, target: int):
        super().__init__(f"no unblocked path from cell {entrance} to cell {target}")
        self.entrance = entrance
        self.target = target


@dataclass(frozen=True)
class ThreatPath:
    entrance: int
    target: int
    cells: tuple[int, ...]
    polyline: tuple[Point, ...]
    total_length: float
    truncated_length: float
    prefix: tuple[Point, ...]


def neighbors(s: GridScenario, j: int) -> list[tuple[int, float]]:
    """Unblocked 8-neighbors of ``j`` in fixed direction order, with step lengths.

    A diagonal move needs both orthogonal cells it passes between to be unblocked.
    """
    r, c = cell_rc(s, j)
    out = []
    for dr, dc in DIRECTIONS:
        rr, cc = r + dr, c + dc
        if not (0 <= rr < s.rows and 0 <= cc < s.cols):
            continue
        k = cell_index(s, rr, cc)
        if k in s.blocked:
            continue
        if dr and dc:
            if cell_index(s, r + dr, c) in s.blocked or cell_index(s, r, c + dc) in s.blocked:
                continue
            out.append((k, s.cell_size * SQRT2))
        else:
            out.append((k, s.cell_size))
    return out


def reachable_from(s: GridScenario, e: int) -> set[int]:
    """Cells reachable from ``e`` by breadth-first search over the move graph."""
    if e in s.blocked:
        return set()
    seen = {e}
    queue = deque([e])
    while queue:
        j = queue.popleft()
        for k, _ in neighbors(s, j):
            if k not in seen:
                seen.add(k)
                queue.append(k)
    return seen


def _dijkstra(s: GridScenario, source: int, target: int) -> tuple[list[int], float]:
    dist = {source: 0.0}
    pred: dict[int, int] = {}
    done: set[int] = set()
    heap = [(0.0, source)]
    while heap:
        d, j = heapq.heappop(heap)
        if j in done:
            continue
        done.add(j)
        if j == target:
            break
        for k, w in neighbors(s, j):
            nd = d + w
            if nd < dist.get(k, math.inf):
                dist[k] = nd
                pred[k] = j
                heapq.heappush(heap, (nd, k))
    if target not in done:
        raise NoPath(source, target)
    cells = [target]
    while cells[-1] != source:
        cells.append(pred[cells[-1]])
    cells.reverse()
    return cells, dist[target]


def polyline_length(points: tuple[Point, ...] | list[Point]) -> float:
    return math.fsum(math.dist(a, b) for a, b in zip(points, points[1:]))


def truncate_polyline(points: tuple[Point, ...], buffer: float) -> tuple[Point, ...]:
    """Prefix of ``points`` ending ``buffer`` meters of arc length before the end.

    Returns ``()`` when the buffer swallows the whole polyline.
    """
    if buffer < 0:
        raise ValueError("buffer must be >= 0")
    if buffer == 0:
        return tuple(points)
    keep = polyline_length(points) - buffer
    if keep <= 0 or len(points) < 2:
        return ()
    out = [points[0]]
    walked = 0.0
    for a, b in zip(points, points[1:]):
        seg = math.dist(a, b)
        if walked + seg >= keep:
            t = (keep - walked) / seg if seg > 0 else 0.0
            cut = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
            if t > 0:
                out.append(cut)
            break
        out.append(b)
        walked += seg
    return tuple(out)


def truncate_path(p: ThreatPath, buffer: float) -> tuple[Point, ...]:
    return truncate_polyline(p.polyline, buffer)


def shortest_path(s: GridScenario, e: int, j: int) -> ThreatPath:
    for cell in (e, j):
        cell_rc(s, cell)
        if cell in s.blocked:
            raise NoPath(e, j)
    cells, _ = _dijkstra(s, e, j)
    polyline = tuple(cell_center(s, c) for c in cells)
    # sum exact step lengths rather than float-accumulated Dijkstra labels
    n_diag = sum(1 for a, b in zip(cells, cells[1:])
                 if cell_rc(s, a)[0] != cell_rc(s, b)[0] and cell_rc(s, a)[1] != cell_rc(s, b)[1])
    n_ortho = len(cells) - 1 - n_diag
    total = s.cell_size * (n_ortho + n_diag * SQRT2)
    buffer = s.buffer_m
    prefix = truncate_polyline(polyline, buffer)
    return ThreatPath(
        entrance=e,
        target=j,
        cells=tuple(cells),
        polyline=polyline,
        total_length=total,
        truncated_length=max(0.0, total - buffer),
        prefix=prefix,
    )


def all_paths(s: GridScenario) -> dict[tuple[int, int], ThreatPath]:
    """One shortest path per (entrance, target) pair with gamma > 0."""
    return {(e, j): shortest_path(s, e, j) for e, j in s.positive_pairs()}
