"""Navigation policy: closest-frontier goal selection with target override,
A* planning over the agent map, local action generation with recovery and
random fallback, the image-memory rule, and stop conditions."""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    FACING_TOLERANCE_RAD,
    FORWARD_STEP_M,
    NUM_HEADINGS,
    SQRT2,
    TURN_STEP_RAD,
    cell_center,
    heading_index,
    inflate_obstacles,
    wrap_pi,
)
from .gridpath import Cell, grid_dijkstra, reconstruct
from .mapping import FREE, OBSTACLE, SemanticMap, detect_frontiers, target_cells
from .world import AgentPose, Observation

MEMORY_RANGE_M = 1.0


class ExplorationComplete(Exception):
    """No frontier cell remains; the map is exhausted."""


class NoReachableFrontier(Exception):
    """Frontiers exist but none is eligible and reachable."""


class PlanningError(RuntimeError):
    """Goal unreachable in the planning graph."""


@dataclass
class MemoryEntry:
    snapshot_ref: int
    pose: AgentPose
    itm_score: float
    step_index: int
    instance_id: str


@dataclass
class StopPolicy:
    max_steps: int = 100
    replan_interval: int = 25
    beta: float = 0.1


@dataclass
class PlannerState:
    mode: str = "explore"
    long_term_goal: Cell | None = None
    steps_since_replan: int = 0
    total_steps: int = 0
    memory: list = field(default_factory=list)
    exhausted_frontiers: set = field(default_factory=set)
    queue: list = field(default_factory=list)
    rng: random.Random = field(default_factory=random.Random)
    last_collided: bool = False
    stop_reason: str | None = None
    # full look-around before committing to a goal (12 x 30 degrees)
    spin_remaining: int = NUM_HEADINGS

    @classmethod
    def seeded(cls, seed: int) -> "PlannerState":
        return cls(rng=random.Random(seed))

    def best_itm(self) -> float | None:
        if not self.memory:
            return None
        return max(e.itm_score for e in self.memory)


def planning_grid(m: SemanticMap) -> tuple[np.ndarray, np.ndarray]:
    """Traversability and entry-cost multipliers for the agent map: mapped
    obstacles inflated by one cell are excluded, unknown space is
    traversable at double cost so plans can extend toward frontiers."""
    blocked = inflate_obstacles(m.state == OBSTACLE)
    cost = np.where(m.state == FREE, 1.0, 2.0)
    return ~blocked, cost


def _arrival_distance(dist: dict, cell: Cell) -> float:
    """Geodesic distance to a goal cell or, when inflation keeps the cell
    itself out of the graph, to its nearest 8-neighbor (getting next to a
    frontier reveals it just as well as standing on it)."""
    best = dist.get(cell, math.inf)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            d = dist.get((cell[0] + dr, cell[1] + dc), math.inf)
            if d < best:
                best = d
    return best


def select_goal(m: SemanticMap, pose: AgentPose, state: PlannerState,
                target_category: str) -> tuple[Cell, str]:
    """Target centroid beats frontiers; otherwise the eligible frontier with
    minimal geodesic distance over the planning graph, ties by (row, col)."""
    cells, centroid = target_cells(m, target_category)
    if cells:
        return centroid, "approach"
    frontiers = detect_frontiers(m)
    if not frontiers:
        raise ExplorationComplete("map exhausted")
    eligible = [f for f in frontiers if f not in state.exhausted_frontiers]
    if not eligible:
        raise NoReachableFrontier("all frontiers exhausted")
    trav, cost = planning_grid(m)
    pcell = pose.cell(m.cell_size)
    trav[pcell] = True
    dist, _ = grid_dijkstra(trav, [pcell], m.cell_size, cost_mult=cost)
    best = None
    best_d = math.inf
    for f in eligible:  # already (row, col) sorted
        d = _arrival_distance(dist, f)
        if d < best_d - 1e-12:
            best_d = d
            best = f
    if best is None or not math.isfinite(best_d):
        raise NoReachableFrontier("no frontier reachable from pose")
    return best, "explore"


def astar(m: SemanticMap, start: Cell, goal: Cell) -> tuple[list[Cell], float]:
    """A* over the planning graph with an octile-distance heuristic
    (admissible: every entry cost multiplier is >= 1)."""
    trav, cost_mult = planning_grid(m)
    h, w = trav.shape
    if not (0 <= goal[0] < h and 0 <= goal[1] < w) or not trav[goal]:
        raise PlanningError(f"goal {goal} not traversable in the planning graph")
    trav[start] = True
    s = m.cell_size

    def octile(r: int, c: int) -> float:
        dr = abs(r - goal[0])
        dc = abs(c - goal[1])
        return s * (max(dr, dc) + (SQRT2 - 1.0) * min(dr, dc))

    g = {start: 0.0}
    parent: dict[Cell, Cell] = {}
    heap = [(octile(*start), start[0], start[1])]
    closed: set[Cell] = set()
    diag = s * SQRT2
    while heap:
        _, r, c = heapq.heappop(heap)
        if (r, c) in closed:
            continue
        closed.add((r, c))
        if (r, c) == goal:
            return reconstruct(parent, goal), g[goal]
        gc = g[(r, c)]
        for dr, dc, diagonal in (
            (-1, 0, False), (1, 0, False), (0, -1, False), (0, 1, False),
            (-1, -1, True), (-1, 1, True), (1, -1, True), (1, 1, True),
        ):
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or not trav[nr, nc]:
                continue
            if diagonal and not (trav[r, nc] and trav[nr, c]):
                continue
            step = (diag if diagonal else s) * cost_mult[nr, nc]
            ng = gc + step
            if ng < g.get((nr, nc), math.inf) - 1e-12:
                g[(nr, nc)] = ng
                parent[(nr, nc)] = (r, c)
                heapq.heappush(heap, (ng + octile(nr, nc), nr, nc))
    raise PlanningError(f"no path from {start} to {goal}")


def compile_actions(path: list[Cell], pose: AgentPose, cell_size: float) -> list[str]:
    """Convert a cell path into turn/forward actions: rotate to the nearest
    discrete heading for each straight run, then emit one forward per
    forward-step of run length (never zero for a non-empty run)."""
    actions: list[str] = []
    cur = heading_index(pose.theta)
    i = 1
    while i < len(path):
        dr = path[i][0] - path[i - 1][0]
        dc = path[i][1] - path[i - 1][1]
        want = heading_index(math.atan2(dr, dc))
        length = cell_size * (SQRT2 if dr and dc else 1.0)
        while i + 1 < len(path):
            ndr = path[i + 1][0] - path[i][0]
            ndc = path[i + 1][1] - path[i][1]
            if (ndr, ndc) != (dr, dc):
                break
            length += cell_size * (SQRT2 if dr and dc else 1.0)
            i += 1
        diff = (want - cur) % NUM_HEADINGS
        if diff <= NUM_HEADINGS // 2:
            actions.extend(["turn_left"] * diff)
        else:
            actions.extend(["turn_right"] * (NUM_HEADINGS - diff))
        cur = want
        actions.extend(["forward"] * max(1, round(length / FORWARD_STEP_M)))
        i += 1
    return actions


def plan_path(m: SemanticMap, pose: AgentPose, goal: Cell) -> list[str]:
    """A* to the goal cell, compiled to actions. Raises PlanningError when
    the goal is unreachable in the planning graph."""
    path, _ = astar(m, pose.cell(m.cell_size), goal)
    return compile_actions(path, pose, m.cell_size)


def maybe_memorize(pose: AgentPose, obs: Observation, snapshot_provider,
                   target_category: str, itm, declarative: str,
                   memory: list, step_index: int) -> list[MemoryEntry]:
    """Store a scored snapshot for every target-category contact within one
    meter whose center the agent faces (at most one entry per instance and
    step). snapshot_provider is called lazily, once per qualifying step."""
    new: list[MemoryEntry] = []
    snap = None
    for contact in obs.contacts:
        if contact.category != target_category:
            continue
        if contact.range_m > MEMORY_RANGE_M + 1e-12:
            continue
        if abs(contact.bearing) > FACING_TOLERANCE_RAD + 1e-12:
            continue
        if snap is None:
            snap = snapshot_provider()
        entry = MemoryEntry(
            snapshot_ref=step_index,
            pose=pose,
            itm_score=itm(snap, declarative),
            step_index=step_index,
            instance_id=contact.instance_id,
        )
        memory.append(entry)
        new.append(entry)
    return new


def check_stop(state: PlannerState, policy: StopPolicy) -> str | None:
    """Stop reason or None. The threshold check is strictly greater-than,
    so beta = 0.0 stops on the first positive-scoring memory."""
    if any(e.itm_score > policy.beta for e in state.memory):
        return "itm_threshold"
    if state.total_steps >= policy.max_steps:
        return "max_steps"
    return None


def _plan_queue(m: SemanticMap, pose: AgentPose, goal: Cell, mode: str) -> list[str]:
    """Queue of actions toward the goal. Goals outside the planning graph
    (target centroids on object cells, frontiers hugging mapped walls) fall
    back to the nearest reachable cell to the goal."""
    start = pose.cell(m.cell_size)
    try:
        return compile_actions(astar(m, start, goal)[0], pose, m.cell_size)
    except PlanningError:
        trav, cost = planning_grid(m)
        trav[start] = True
        dist, parent = grid_dijkstra(trav, [start], m.cell_size, cost_mult=cost)
        near = min(
            dist.keys(),
            key=lambda rc: ((rc[0] - goal[0]) ** 2 + (rc[1] - goal[1]) ** 2, rc),
        )
        return compile_actions(reconstruct(parent, near), pose, m.cell_size)


def next_action(m: SemanticMap, pose: AgentPose, state: PlannerState,
                policy: StopPolicy, target_category: str) -> str:
    """One policy step. Replans on the fixed cadence, on first target
    detection, on queue exhaustion or goal invalidation; a collided forward
    triggers a recovery turn; when every frontier is exhausted or
    unreachable the action is drawn from the seeded RNG. Raises
    ExplorationComplete when no frontier remains and no target is mapped."""
    if state.last_collided:
        state.last_collided = False
        state.queue.clear()
        return state.rng.choice(("turn_left", "turn_right"))

    cells, _ = target_cells(m, target_category)
    if cells:
        state.spin_remaining = 0  # target mapped, stop scanning
    elif state.spin_remaining > 0:
        state.spin_remaining -= 1
        return "turn_left"

    replan = False
    if cells and state.mode != "approach":
        replan = True
    elif state.steps_since_replan >= policy.replan_interval:
        replan = True
    elif not state.queue:
        replan = True
    elif state.long_term_goal is not None and m.state[state.long_term_goal] == OBSTACLE:
        replan = True

    if replan:
        state.queue.clear()
        state.steps_since_replan = 0
        try:
            goal, mode = select_goal(m, pose, state, target_category)
        except NoReachableFrontier:
            # Give previously exhausted frontiers another chance once the
            # map has changed; meanwhile move randomly (seeded).
            state.exhausted_frontiers.clear()
            state.long_term_goal = None
            state.mode = "explore"
            return state.rng.choice(("forward", "turn_left", "turn_right"))
        state.long_term_goal = goal
        state.mode = mode
        try:
            state.queue = _plan_queue(m, pose, goal, mode)
        except PlanningError:
            state.queue = []
        if not state.queue and mode == "explore":
            # no progress possible toward this frontier from here
            state.exhausted_frontiers.add(goal)

    if state.queue:
        return state.queue.pop(0)

    # Arrived (or no progress possible). In approach mode turn in place to
    # face the target so the memory rule can fire; otherwise rotate to
    # reveal the unknown space that made this cell a frontier.
    if state.mode == "approach" and state.long_term_goal is not None:
        gx, gy = cell_center(*state.long_term_goal, m.cell_size)
        bearing = wrap_pi(math.atan2(gy - pose.y, gx - pose.x) - pose.theta)
        if abs(bearing) > FACING_TOLERANCE_RAD:
            return "turn_left" if bearing > 0 else "turn_right"
        return "forward"
    return "turn_left"
