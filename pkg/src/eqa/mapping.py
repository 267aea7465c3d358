"""Agent-built top-down map: occupancy carving from depth rays, threshold-
gated semantic projection, frontier detection and target-cell lookup."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .gridpath import Cell
from .world import Contact, Observation

UNKNOWN = 0
FREE = 1
OBSTACLE = 2

_STATE_GLYPHS = {UNKNOWN: "?", FREE: ".", OBSTACLE: "#"}


class FrameMismatchError(ValueError):
    """Observation and map disagree on grid shape or cell size."""


def default_confidence(contact: Contact) -> float:
    """Mock detector confidence: the visible fraction of the footprint, so
    the detection threshold directly gates partial views."""
    return contact.visibility_fraction


@dataclass
class DetectionModel:
    alpha: float
    confidence: Callable[[Contact], float] = default_confidence

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


@dataclass
class SemanticMap:
    """Occupancy state plus per-category cell channels.

    State refines monotonically (unknown -> free, unknown -> obstacle,
    free -> obstacle); nothing ever reverts to unknown and channels never
    shrink. provenance keeps the max detection confidence per semantic cell.
    """

    width: int
    height: int
    cell_size: float
    state: np.ndarray = None
    channels: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.state is None:
            self.state = np.zeros((self.height, self.width), dtype=np.int8)

    @classmethod
    def blank_like(cls, scene) -> "SemanticMap":
        return cls(width=scene.width, height=scene.height, cell_size=scene.cell_size)

    def explored_count(self) -> int:
        return int(np.count_nonzero(self.state != UNKNOWN))

    def snapshot_text(self) -> str:
        """Text export: '?' unknown, '.' free, '#' obstacle, one uppercase
        letter per tracked category (assigned in sorted category order)."""
        rows = [[_STATE_GLYPHS[v] for v in row] for row in self.state.tolist()]
        for letter, cat in self.channel_legend().items():
            for (r, c) in self.channels[cat]:
                rows[r][c] = letter
        return "\n".join("".join(row) for row in rows)

    def channel_legend(self) -> dict:
        letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
        return {letters[i % len(letters)]: cat
                for i, cat in enumerate(sorted(self.channels))}

    def channels_json(self) -> dict:
        return {
            "legend": self.channel_legend(),
            "channels": {cat: [list(rc) for rc in sorted(cells)]
                         for cat, cells in self.channels.items()},
        }


def update_map(m: SemanticMap, pose, obs: Observation, det: DetectionModel) -> SemanticMap:
    """Fold one observation into the map.

    Ray-swept cells before each hit become free, hit cells become obstacle
    (max-range rays mark no obstacle). Contacts at or above the detection
    threshold project their visible footprint cells into the category
    channel; solid objects mark those cells obstacle, flat ones free.
    Returns the same map, mutated; the explored region never shrinks.
    """
    if obs.grid_shape != (m.height, m.width) or obs.cell_size != m.cell_size:
        raise FrameMismatchError(
            f"observation frame {obs.grid_shape}@{obs.cell_size} does not match "
            f"map {(m.height, m.width)}@{m.cell_size}")
    state = m.state
    for (r, c) in obs.free_cells:
        if state[r, c] == UNKNOWN:
            state[r, c] = FREE
    for (r, c) in obs.hit_cells:
        state[r, c] = OBSTACLE
    for contact in obs.contacts:
        conf = det.confidence(contact)
        if conf < det.alpha:
            continue
        cells = m.channels.setdefault(contact.category, set())
        for cell in contact.visible_cells:
            cells.add(cell)
            if contact.solid:
                state[cell] = OBSTACLE
            elif state[cell] == UNKNOWN:
                state[cell] = FREE
            prev = m.provenance.get(cell, 0.0)
            if conf > prev:
                m.provenance[cell] = conf
    return m


def detect_frontiers(m: SemanticMap) -> list[Cell]:
    """Free cells with at least one 4-neighbor unknown, sorted by (row, col).
    Out-of-bounds space does not count as unknown."""
    free = m.state == FREE
    unk = m.state == UNKNOWN
    edge = np.zeros_like(free)
    edge[:-1, :] |= unk[1:, :]
    edge[1:, :] |= unk[:-1, :]
    edge[:, :-1] |= unk[:, 1:]
    edge[:, 1:] |= unk[:, :-1]
    rr, cc = np.nonzero(free & edge)
    return sorted(zip(rr.tolist(), cc.tolist()))


def target_cells(m: SemanticMap, category: str) -> tuple[set, Cell | None]:
    """Channel cells for a category and their centroid cell (the member
    nearest the arithmetic mean, ties by (row, col)); (empty, None) when the
    category was never detected."""
    cells = m.channels.get(category, set())
    if not cells:
        return set(), None
    mr = sum(r for r, _ in cells) / len(cells)
    mc = sum(c for _, c in cells) / len(cells)
    centroid = min(cells, key=lambda rc: ((rc[0] - mr) ** 2 + (rc[1] - mc) ** 2, rc))
    return set(cells), centroid
