"""Shared grid/angle conventions.

World frame: x grows with column index, y with row index (row 0 is the top
of the text grid). Cell (r, c) spans x in [c*s, (c+1)*s) and
y in [r*s, (r+1)*s) for cell size s. Headings are radians in [0, 2pi),
pointing along (cos t, sin t); turn_left adds +30 degrees.
"""

from __future__ import annotations

import math

import numpy as np

# Agent kinematics: 0.25 m forward steps, 30 degree turns (12 headings).
FORWARD_STEP_M = 0.25
TURN_STEP_DEG = 30
TURN_STEP_RAD = math.radians(TURN_STEP_DEG)
NUM_HEADINGS = 360 // TURN_STEP_DEG

# Depth sensor: 90 rays over a 90 degree field of view, 5 m range.
SENSOR_RAYS = 90
SENSOR_FOV_RAD = math.radians(90.0)
SENSOR_MAX_RANGE_M = 5.0

DEFAULT_CELL_SIZE = 0.05

# Half the turn quantum: "facing" a point means within this of the bearing.
FACING_TOLERANCE_RAD = math.radians(15.0)

SQRT2 = math.sqrt(2.0)

TWO_PI = 2.0 * math.pi

# 8-connected neighborhood, fixed iteration order for determinism.
# (dr, dc, diagonal?)
NEIGHBORS_8 = (
    (-1, 0, False),
    (1, 0, False),
    (0, -1, False),
    (0, 1, False),
    (-1, -1, True),
    (-1, 1, True),
    (1, -1, True),
    (1, 1, True),
)

NEIGHBORS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))


def wrap_angle(theta: float) -> float:
    """Normalize to [0, 2pi)."""
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    return t if t < TWO_PI else 0.0


def wrap_pi(theta: float) -> float:
    """Normalize to (-pi, pi]."""
    t = math.fmod(theta, TWO_PI)
    if t > math.pi:
        t -= TWO_PI
    elif t <= -math.pi:
        t += TWO_PI
    return t


def heading_index(theta: float) -> int:
    """Nearest discrete heading 0..11 (ties round up, deterministic)."""
    return int(math.floor(wrap_angle(theta) / TURN_STEP_RAD + 0.5)) % NUM_HEADINGS


def quantize_heading(theta: float) -> float:
    return heading_index(theta) * TURN_STEP_RAD


def point_to_cell(x: float, y: float, cell_size: float) -> tuple[int, int]:
    return (int(math.floor(y / cell_size)), int(math.floor(x / cell_size)))


def cell_center(r: int, c: int, cell_size: float) -> tuple[float, float]:
    return ((c + 0.5) * cell_size, (r + 0.5) * cell_size)


def inflate_obstacles(obstacles: np.ndarray) -> np.ndarray:
    """Dilate an obstacle mask by one cell (8-neighborhood).

    Out-of-bounds space does not count as an obstacle; a border-free grid
    stays uninflated at its edges.
    """
    out = obstacles.copy()
    out[:-1, :] |= obstacles[1:, :]
    out[1:, :] |= obstacles[:-1, :]
    out[:, :-1] |= obstacles[:, 1:]
    out[:, 1:] |= obstacles[:, :-1]
    out[:-1, :-1] |= obstacles[1:, 1:]
    out[:-1, 1:] |= obstacles[1:, :-1]
    out[1:, :-1] |= obstacles[:-1, 1:]
    out[1:, 1:] |= obstacles[:-1, :-1]
    return out
