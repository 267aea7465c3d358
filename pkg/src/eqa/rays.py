"""Grid ray traversal (Amanatides-Woo style DDA).

All casts share one marching loop so depth readings, swept-motion checks
and line-of-sight tests agree cell-for-cell. Distances are Euclidean
meters along the ray; a hit reports the entry distance into the first
obstacle cell, never its center.
"""

from __future__ import annotations

import math

import numpy as np

_INF = float("inf")


def _setup(x0: float, y0: float, dx: float, dy: float, cell_size: float):
    """Initial cell, axis steps and crossing distances for one ray."""
    c = int(math.floor(x0 / cell_size))
    r = int(math.floor(y0 / cell_size))
    if dx > 0.0:
        step_c, tmax_x, tdelta_x = 1, ((c + 1) * cell_size - x0) / dx, cell_size / dx
    elif dx < 0.0:
        step_c, tmax_x, tdelta_x = -1, (c * cell_size - x0) / dx, -cell_size / dx
    else:
        step_c, tmax_x, tdelta_x = 0, _INF, _INF
    if dy > 0.0:
        step_r, tmax_y, tdelta_y = 1, ((r + 1) * cell_size - y0) / dy, cell_size / dy
    elif dy < 0.0:
        step_r, tmax_y, tdelta_y = -1, (r * cell_size - y0) / dy, -cell_size / dy
    else:
        step_r, tmax_y, tdelta_y = 0, _INF, _INF
    return r, c, step_r, step_c, tmax_x, tmax_y, tdelta_x, tdelta_y


def cast_ray(
    occ: np.ndarray,
    x0: float,
    y0: float,
    angle: float,
    cell_size: float,
    max_range: float,
) -> tuple[float, list[tuple[int, int]], tuple[int, int] | None]:
    """March one ray through the occupancy grid (True = obstacle).

    Returns (reading, free_cells, hit_cell). The reading is the entry
    distance into the first obstacle cell, clamped to max_range; rays that
    leave the grid or reach max_range report max_range and no hit cell.
    free_cells lists every cell entered strictly before the hit, origin
    cell included.
    """
    h, w = occ.shape
    dx = math.cos(angle)
    dy = math.sin(angle)
    r, c, step_r, step_c, tmax_x, tmax_y, tdelta_x, tdelta_y = _setup(
        x0, y0, dx, dy, cell_size
    )
    if not (0 <= r < h and 0 <= c < w):
        return max_range, [], None
    if occ[r, c]:
        return 0.0, [], (r, c)
    free = [(r, c)]
    while True:
        if tmax_x <= tmax_y:
            t = tmax_x
            tmax_x += tdelta_x
            c += step_c
        else:
            t = tmax_y
            tmax_y += tdelta_y
            r += step_r
        if t >= max_range:
            return max_range, free, None
        if not (0 <= r < h and 0 <= c < w):
            return max_range, free, None
        if occ[r, c]:
            return t, free, (r, c)
        free.append((r, c))


def cast_fan(
    occ: np.ndarray,
    x0: float,
    y0: float,
    angles: np.ndarray,
    cell_size: float,
    max_range: float,
) -> tuple[np.ndarray, list[tuple[int, int]], list[tuple[int, int]]]:
    """Cast every angle; pooled free/hit cells are deduplicated in ray order."""
    readings = np.empty(len(angles), dtype=np.float64)
    free_seen: set[tuple[int, int]] = set()
    hit_seen: set[tuple[int, int]] = set()
    free_cells: list[tuple[int, int]] = []
    hit_cells: list[tuple[int, int]] = []
    for i, a in enumerate(angles):
        reading, free, hit = cast_ray(occ, x0, y0, float(a), cell_size, max_range)
        readings[i] = reading
        for cell in free:
            if cell not in free_seen:
                free_seen.add(cell)
                free_cells.append(cell)
        if hit is not None and hit not in hit_seen:
            hit_seen.add(hit)
            hit_cells.append(hit)
    return readings, free_cells, hit_cells


def line_of_sight(
    occ: np.ndarray,
    x0: float,
    y0: float,
    r1: int,
    c1: int,
    cell_size: float,
) -> bool:
    """True when no obstacle cell is entered strictly before cell (r1, c1).

    The destination cell itself may be an obstacle (a solid object face is
    visible); cells of other objects or walls in between block.
    """
    h, w = occ.shape
    tx = (c1 + 0.5) * cell_size
    ty = (r1 + 0.5) * cell_size
    dist = math.hypot(tx - x0, ty - y0)
    if dist == 0.0:
        return True
    dx = (tx - x0) / dist
    dy = (ty - y0) / dist
    r, c, step_r, step_c, tmax_x, tmax_y, tdelta_x, tdelta_y = _setup(
        x0, y0, dx, dy, cell_size
    )
    if (r, c) == (r1, c1):
        return True
    if not (0 <= r < h and 0 <= c < w) or occ[r, c]:
        return False
    guard = h + w + 4
    while guard > 0:
        guard -= 1
        if tmax_x <= tmax_y:
            tmax_x += tdelta_x
            c += step_c
        else:
            tmax_y += tdelta_y
            r += step_r
        if (r, c) == (r1, c1):
            return True
        if not (0 <= r < h and 0 <= c < w):
            return False
        if occ[r, c]:
            return False
    return False


def segment_cells(
    x0: float, y0: float, x1: float, y1: float, cell_size: float
) -> list[tuple[int, int]]:
    """Cells entered by the segment, in order, origin and destination included."""
    dist = math.hypot(x1 - x0, y1 - y0)
    end = (int(math.floor(y1 / cell_size)), int(math.floor(x1 / cell_size)))
    if dist == 0.0:
        return [end]
    dx = (x1 - x0) / dist
    dy = (y1 - y0) / dist
    r, c, step_r, step_c, tmax_x, tmax_y, tdelta_x, tdelta_y = _setup(
        x0, y0, dx, dy, cell_size
    )
    cells = [(r, c)]
    guard = int(2.0 * dist / cell_size) + 8
    while (r, c) != end and guard > 0:
        guard -= 1
        if tmax_x <= tmax_y:
            t = tmax_x
            tmax_x += tdelta_x
            c += step_c
        else:
            t = tmax_y
            tmax_y += tdelta_y
            r += step_r
        if t > dist:
            break
        cells.append((r, c))
    if cells[-1] != end:
        cells.append(end)
    return cells
