"""Weighted shortest paths on 8-connected cell grids.

Diagonal steps cost sqrt(2) times the cell size and are disallowed when
either adjacent cardinal cell is blocked (no corner cutting). An optional
per-cell cost multiplier scales the cost of *entering* a cell; the world
geodesic uses none, the planner charges unknown space double.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .geometry import SQRT2

Cell = tuple[int, int]


def grid_dijkstra(
    traversable: np.ndarray,
    sources: list[Cell],
    cell_size: float,
    cost_mult: np.ndarray | None = None,
    target: Cell | None = None,
) -> tuple[dict[Cell, float], dict[Cell, Cell]]:
    """Multi-source Dijkstra. Returns (distance, parent) dicts in meters.

    Stops early once `target` is settled. Ties pop in (dist, row, col)
    order so results are deterministic.
    """
    h, w = traversable.shape
    dist: dict[Cell, float] = {}
    parent: dict[Cell, Cell] = {}
    heap: list[tuple[float, int, int]] = []
    for (r, c) in sources:
        if 0 <= r < h and 0 <= c < w and traversable[r, c]:
            dist[(r, c)] = 0.0
            heapq.heappush(heap, (0.0, r, c))
    diag = cell_size * SQRT2
    while heap:
        d, r, c = heapq.heappop(heap)
        if d > dist.get((r, c), math.inf):
            continue
        if target is not None and (r, c) == target:
            break
        for dr, dc, diagonal in (
            (-1, 0, False), (1, 0, False), (0, -1, False), (0, 1, False),
            (-1, -1, True), (-1, 1, True), (1, -1, True), (1, 1, True),
        ):
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w):
                continue
            if not traversable[nr, nc]:
                continue
            if diagonal and not (traversable[r, nc] and traversable[nr, c]):
                continue
            step = diag if diagonal else cell_size
            if cost_mult is not None:
                step *= cost_mult[nr, nc]
            nd = d + step
            if nd < dist.get((nr, nc), math.inf) - 1e-12:
                dist[(nr, nc)] = nd
                parent[(nr, nc)] = (r, c)
                heapq.heappush(heap, (nd, nr, nc))
    return dist, parent


def reconstruct(parent: dict[Cell, Cell], end: Cell) -> list[Cell]:
    path = [end]
    while path[-1] in parent:
        path.append(parent[path[-1]])
    path.reverse()
    return path
