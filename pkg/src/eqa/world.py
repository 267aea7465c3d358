"""Deterministic gridworld: scene files, agent kinematics, ray sensing,
geodesic distances and episode start generation.

Scene files are UTF-8 JSON with a text grid (`#` obstacle, `.` free),
object instances with cell footprints, labelled room rectangles and QA
items. The world is immutable after load and safe to share across
episode workers.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import rays
from .geometry import (
    FORWARD_STEP_M,
    NUM_HEADINGS,
    SENSOR_FOV_RAD,
    SENSOR_MAX_RANGE_M,
    SENSOR_RAYS,
    SQRT2,
    TURN_STEP_RAD,
    DEFAULT_CELL_SIZE,
    cell_center,
    heading_index,
    inflate_obstacles,
    point_to_cell,
    wrap_angle,
    wrap_pi,
)
from .gridpath import Cell, grid_dijkstra, reconstruct

ACTIONS = ("forward", "turn_left", "turn_right", "stop")
QUESTION_TYPES = ("color", "room", "location", "what_is", "count")
OFFSETS = ("t10", "t30", "t50", "random")


class SceneError(ValueError):
    """Base for scene file problems."""


class SceneParseError(SceneError):
    pass


class SceneValidationError(SceneError):
    pass


class NoPathError(RuntimeError):
    """Endpoints lie in different free components."""


@dataclass(frozen=True)
class AgentPose:
    """Continuous pose; theta is radians in [0, 2pi)."""

    x: float
    y: float
    theta: float

    def cell(self, cell_size: float) -> Cell:
        return point_to_cell(self.x, self.y, cell_size)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.theta]


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    category: str
    attributes: dict = field(hash=False)
    footprint: frozenset
    center: tuple[float, float]
    solid: bool


@dataclass(frozen=True)
class QAItem:
    question: str
    answer: str
    target_instance_id: str
    end_pose: AgentPose
    question_type: str


@dataclass(frozen=True)
class Contact:
    """One visible object instance.

    range_m is the distance to the nearest visible footprint cell center;
    bearing is measured to the instance center, relative to the agent
    heading. visible_cells are the footprint cells with line of sight
    inside the field of view, within sensor range.
    """

    instance_id: str
    category: str
    visibility_fraction: float
    bearing: float
    range_m: float
    visible_cells: tuple
    solid: bool


@dataclass(eq=False)
class Observation:
    rays: np.ndarray
    bearings: np.ndarray
    contacts: list
    step_index: int
    cell_size: float
    grid_shape: tuple[int, int]
    free_cells: list
    hit_cells: list


class GridScene:
    """Ground-truth world. Immutable after construction."""

    def __init__(self, width, height, cell_size, obstacles, objects, rooms,
                 qa_items, scene_id="scene"):
        self.width = width
        self.height = height
        self.cell_size = cell_size
        self.obstacles = obstacles
        self.objects = objects
        self.rooms = rooms
        self.qa_items = qa_items
        self.scene_id = scene_id
        self.inflated = inflate_obstacles(obstacles)
        self._by_id = {o.id: o for o in objects}
        # Objects resting on another object (attribute "on") are seen over
        # their base from any side: their line-of-sight grid drops the base
        # footprint.
        self._los_occ: dict[str, np.ndarray] = {}
        for obj in objects:
            base_id = obj.attributes.get("on")
            base = self._by_id.get(base_id) if base_id else None
            if base is not None and base.solid:
                occ = obstacles.copy()
                for (r, c) in base.footprint:
                    occ[r, c] = False
                self._los_occ[obj.id] = occ

    def los_grid(self, instance_id: str) -> np.ndarray:
        return self._los_occ.get(instance_id, self.obstacles)

    def in_bounds(self, r: int, c: int) -> bool:
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, r: int, c: int) -> bool:
        return self.in_bounds(r, c) and not self.obstacles[r, c]

    def object_by_id(self, oid: str) -> ObjectInstance:
        return self._by_id[oid]

    def room_of_point(self, x: float, y: float) -> str | None:
        r, c = point_to_cell(x, y, self.cell_size)
        for label, (r0, c0, r1, c1) in self.rooms:
            if r0 <= r <= r1 and c0 <= c <= c1:
                return label
        return None


# ---------------------------------------------------------------------------
# Scene loading

def load_scene(text: str, scene_id: str = "scene") -> GridScene:
    """Parse and validate a scene file. Raises SceneParseError on malformed
    input and SceneValidationError on consistency problems; messages name
    the offending entity."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneParseError(f"invalid JSON: {e}") from e
    if not isinstance(data, dict) or "grid" not in data:
        raise SceneParseError("scene must be an object with a 'grid' key")

    cell_size = float(data.get("cell_size", DEFAULT_CELL_SIZE))
    if cell_size <= 0:
        raise SceneValidationError("cell_size must be positive")

    grid_rows = data["grid"]
    if not grid_rows:
        raise SceneParseError("grid is empty")
    width = len(grid_rows[0])
    height = len(grid_rows)
    obstacles = np.zeros((height, width), dtype=bool)
    for r, row in enumerate(grid_rows):
        if len(row) != width:
            raise SceneParseError(f"grid row {r} has length {len(row)}, expected {width}")
        for c, ch in enumerate(row):
            if ch == "#":
                obstacles[r, c] = True
            elif ch != ".":
                raise SceneParseError(f"grid row {r} has invalid char {ch!r}")
    if obstacles.all():
        raise SceneValidationError("scene has no free cell")

    objects = []
    owner: dict[Cell, str] = {}
    for i, entry in enumerate(data.get("objects", [])):
        oid = entry.get("id")
        if not oid:
            raise SceneValidationError(f"object {i} has no id")
        if any(o.id == oid for o in objects):
            raise SceneValidationError(f"duplicate object id {oid}")
        category = (entry.get("category") or "").strip().lower()
        if not category:
            raise SceneValidationError(f"object {oid} has empty category")
        cells = [tuple(rc) for rc in entry.get("cells", [])]
        if not cells:
            raise SceneValidationError(f"object {oid} has empty footprint")
        for (r, c) in cells:
            if not (0 <= r < height and 0 <= c < width):
                raise SceneValidationError(f"object {oid} footprint cell {(r, c)} out of bounds")
            if (r, c) in owner:
                raise SceneValidationError(
                    f"footprint overlap between {owner[(r, c)]} and {oid} at {(r, c)}")
            owner[(r, c)] = oid
        solidity = {bool(obstacles[r, c]) for (r, c) in cells}
        if len(solidity) != 1:
            raise SceneValidationError(
                f"object {oid} footprint mixes obstacle and free cells")
        cx, cy = entry.get("center", (None, None))
        if cx is None:
            raise SceneValidationError(f"object {oid} has no center")
        rs = [r for r, _ in cells]
        cs = [c for _, c in cells]
        if not (min(cs) * cell_size <= cx <= (max(cs) + 1) * cell_size
                and min(rs) * cell_size <= cy <= (max(rs) + 1) * cell_size):
            raise SceneValidationError(f"object {oid} center outside footprint bbox")
        objects.append(ObjectInstance(
            id=oid,
            category=category,
            attributes=dict(entry.get("attributes", {})),
            footprint=frozenset(cells),
            center=(float(cx), float(cy)),
            solid=solidity.pop(),
        ))

    rooms = []
    for i, entry in enumerate(data.get("rooms", [])):
        label = entry.get("label")
        rect = entry.get("rect")
        if not label or not rect or len(rect) != 4:
            raise SceneValidationError(f"room {i} needs a label and a 4-element rect")
        r0, c0, r1, c1 = rect
        if not (0 <= r0 <= r1 < height and 0 <= c0 <= c1 < width):
            raise SceneValidationError(f"room {label!r} rect out of bounds")
        rooms.append((label, (r0, c0, r1, c1)))

    scene = GridScene(width, height, cell_size, obstacles, objects, rooms, [],
                      scene_id=scene_id)

    qa_items = []
    for i, entry in enumerate(data.get("qa", [])):
        tid = entry.get("target_id")
        if tid not in scene._by_id:
            raise SceneValidationError(f"qa {i}: dangling target {tid}")
        question = entry.get("question") or ""
        answer = entry.get("answer") or ""
        if not question or not answer:
            raise SceneValidationError(f"qa {i}: question and answer required")
        qtype = entry.get("type")
        if qtype not in QUESTION_TYPES:
            raise SceneValidationError(f"qa {i}: unknown question type {qtype!r}")
        ep = entry.get("end_pose")
        if not ep or len(ep) != 3:
            raise SceneValidationError(f"qa {i}: end_pose must be [x, y, theta_deg]")
        pose = AgentPose(float(ep[0]), float(ep[1]), wrap_angle(math.radians(ep[2])))
        pr, pc = pose.cell(cell_size)
        if not scene.is_free(pr, pc):
            raise SceneValidationError(f"qa {i}: end pose not on a free cell")
        d = distance_to_cells(scene, (pr, pc), scene._by_id[tid].footprint)
        if d > 1.0 + 1e-9:
            raise SceneValidationError(
                f"qa {i}: end pose is {d:.2f} m from target {tid}, beyond 1.0 m")
        qa_items.append(QAItem(question, answer, tid, pose, qtype))
    scene.qa_items = qa_items
    return scene


def load_scene_file(path) -> GridScene:
    from pathlib import Path

    p = Path(path)
    return load_scene(p.read_text(encoding="utf-8"), scene_id=p.stem)


# ---------------------------------------------------------------------------
# Kinematics

def step(scene: GridScene, pose: AgentPose, action: str) -> tuple[AgentPose, bool]:
    """Apply one action. A forward move is rejected (pose unchanged,
    collided=True) when any swept cell past the origin, or the destination
    cell, is blocked in the one-cell-inflated obstacle grid."""
    if action == "stop":
        return pose, False
    if action == "turn_left":
        return AgentPose(pose.x, pose.y, wrap_angle(pose.theta + TURN_STEP_RAD)), False
    if action == "turn_right":
        return AgentPose(pose.x, pose.y, wrap_angle(pose.theta - TURN_STEP_RAD)), False
    if action != "forward":
        raise ValueError(f"unknown action {action!r}")
    nx = pose.x + FORWARD_STEP_M * math.cos(pose.theta)
    ny = pose.y + FORWARD_STEP_M * math.sin(pose.theta)
    s = scene.cell_size
    dest = point_to_cell(nx, ny, s)
    if not scene.in_bounds(*dest) or scene.inflated[dest]:
        return pose, True
    swept = rays.segment_cells(pose.x, pose.y, nx, ny, s)
    for cell in swept[1:]:
        if not scene.in_bounds(*cell) or scene.inflated[cell]:
            return pose, True
    return AgentPose(nx, ny, pose.theta), False


# ---------------------------------------------------------------------------
# Sensing

def observe(scene: GridScene, pose: AgentPose, step_index: int = 0) -> Observation:
    """Cast the depth fan and compute visible-object contacts.

    A footprint cell is visible when its center is within sensor range,
    inside the field of view, and has unobstructed line of sight from the
    pose. Solid objects are their own occluders; walls occlude everything.
    """
    s = scene.cell_size
    bearings = np.linspace(-SENSOR_FOV_RAD / 2.0, SENSOR_FOV_RAD / 2.0, SENSOR_RAYS)
    angles = pose.theta + bearings
    readings, free_cells, hit_cells = rays.cast_fan(
        scene.obstacles, pose.x, pose.y, angles, s, SENSOR_MAX_RANGE_M)

    contacts = []
    half_fov = SENSOR_FOV_RAD / 2.0 + 1e-12
    for obj in scene.objects:
        visible = []
        best = math.inf
        los_occ = scene.los_grid(obj.id)
        for (r, c) in sorted(obj.footprint):
            cx, cy = cell_center(r, c, s)
            d = math.hypot(cx - pose.x, cy - pose.y)
            if d > SENSOR_MAX_RANGE_M:
                continue
            if abs(wrap_pi(math.atan2(cy - pose.y, cx - pose.x) - pose.theta)) > half_fov:
                continue
            if rays.line_of_sight(los_occ, pose.x, pose.y, r, c, s):
                visible.append((r, c))
                best = min(best, d)
        if visible:
            bearing = wrap_pi(
                math.atan2(obj.center[1] - pose.y, obj.center[0] - pose.x) - pose.theta)
            contacts.append(Contact(
                instance_id=obj.id,
                category=obj.category,
                visibility_fraction=len(visible) / len(obj.footprint),
                bearing=bearing,
                range_m=best,
                visible_cells=tuple(visible),
                solid=obj.solid,
            ))
    return Observation(
        rays=readings,
        bearings=bearings,
        contacts=contacts,
        step_index=step_index,
        cell_size=s,
        grid_shape=(scene.height, scene.width),
        free_cells=free_cells,
        hit_cells=hit_cells,
    )


# ---------------------------------------------------------------------------
# Geodesics

def _resolve_cell(scene: GridScene, p) -> Cell:
    if isinstance(p, AgentPose):
        return p.cell(scene.cell_size)
    return (int(p[0]), int(p[1]))


def shortest_path(scene: GridScene, a, b) -> tuple[list[Cell], float]:
    """Minimal-cost 8-connected path over the inflated-free grid.

    Endpoints may be agent poses or (row, col) cells; both must be on
    ground-truth free cells. Endpoint cells are always admitted into the
    graph even when inflation covers them (poses near furniture must still
    have defined geodesics). Diagonals cost sqrt(2) * cell_size.
    """
    ca = _resolve_cell(scene, a)
    cb = _resolve_cell(scene, b)
    for cell in (ca, cb):
        if not scene.is_free(*cell):
            raise ValueError(f"endpoint {cell} is not a free cell")
    if ca == cb:
        return [ca], 0.0
    trav = ~scene.inflated
    trav[ca] = True
    trav[cb] = True
    dist, parent = grid_dijkstra(trav, [ca], scene.cell_size, target=cb)
    if cb not in dist:
        raise NoPathError(f"no path between {ca} and {cb}")
    return reconstruct(parent, cb), dist[cb]


def distance_to_cells(scene: GridScene, start: Cell, cells) -> float:
    """Geodesic meters from a free cell to the nearest of `cells` over the
    uninflated free grid. Non-free destination cells are reached by a final
    hop from an adjacent free cell. inf when unreachable."""
    trav = ~scene.obstacles
    s = scene.cell_size
    dist, _ = grid_dijkstra(trav, [start], s)
    best = math.inf
    for (r, c) in cells:
        if not scene.obstacles[r, c]:
            best = min(best, dist.get((r, c), math.inf))
            continue
        for dr, dc, diagonal in (
            (-1, 0, False), (1, 0, False), (0, -1, False), (0, 1, False),
            (-1, -1, True), (-1, 1, True), (1, -1, True), (1, 1, True),
        ):
            nr, nc = r + dr, c + dc
            if not scene.is_free(nr, nc):
                continue
            if diagonal and not (scene.is_free(r, nc) and scene.is_free(nr, c)):
                continue
            hop = s * SQRT2 if diagonal else s
            best = min(best, dist.get((nr, nc), math.inf) + hop)
    return best


def free_component(scene: GridScene, cell: Cell, inflated: bool = True) -> list[Cell]:
    """Cells connected to `cell`, sorted by (row, col)."""
    occ = scene.inflated if inflated else scene.obstacles
    trav = ~occ
    trav[cell] = True
    dist, _ = grid_dijkstra(trav, [cell], scene.cell_size)
    return sorted(dist.keys())


def farthest_free_cell(scene: GridScene, from_cell: Cell) -> Cell:
    """Geodesically farthest inflated-free cell; ties by (row, col)."""
    trav = ~scene.inflated
    trav[from_cell] = True
    dist, _ = grid_dijkstra(trav, [from_cell], scene.cell_size)
    best = from_cell
    best_d = -1.0
    for cell in sorted(dist.keys()):
        if dist[cell] > best_d + 1e-12:
            best = cell
            best_d = dist[cell]
    return best


# ---------------------------------------------------------------------------
# Episode starts

def make_start(scene: GridScene, qa: QAItem, offset: str, seed: int) -> AgentPose:
    """Start pose for an episode.

    "tN" walks N actions (turns and forwards both count) backwards from the
    end pose along the reverse of a deterministic action sequence that
    realizes a shortest path; it clamps at the path's far end when the path
    runs out. "random" samples a free cell in the end pose's component
    uniformly, heading uniform over the discrete headings.
    """
    pose, _ = start_with_replay(scene, qa, offset, seed)
    return pose


def start_with_replay(scene: GridScene, qa: QAItem, offset: str, seed: int):
    """make_start plus the forward action sequence that retraces a tN walk
    back to the end pose (empty for random starts)."""
    if offset == "random":
        rng = random.Random(seed)
        end_cell = qa.end_pose.cell(scene.cell_size)
        plain = free_component(scene, end_cell, inflated=False)
        cand = [cell for cell in plain if not scene.inflated[cell]]
        if not cand:
            cand = plain
        r, c = cand[rng.randrange(len(cand))]
        x, y = cell_center(r, c, scene.cell_size)
        theta = rng.randrange(NUM_HEADINGS) * TURN_STEP_RAD
        return AgentPose(x, y, theta), []
    if not offset.startswith("t"):
        raise ValueError(f"unknown offset {offset!r}")
    n = int(offset[1:])
    return _backwalk(scene, qa, n)


def _backwalk(scene: GridScene, qa: QAItem, n: int):
    s = scene.cell_size
    end_cell = qa.end_pose.cell(s)
    far = farthest_free_cell(scene, end_cell)
    if far == end_cell:
        return qa.end_pose, []
    path, _ = shortest_path(scene, end_cell, far)
    waypoints = [cell_center(r, c, s) for (r, c) in path]

    x, y, theta = qa.end_pose.x, qa.end_pose.y, qa.end_pose.theta
    replay: list[str] = []  # built back-to-front
    wp = 0
    guard = 6 * n + 48
    while len(replay) < n and guard > 0:
        guard -= 1
        while wp < len(waypoints) and math.hypot(waypoints[wp][0] - x,
                                                 waypoints[wp][1] - y) < 0.75 * FORWARD_STEP_M:
            wp += 1
        if wp >= len(waypoints):
            break
        tx, ty = waypoints[wp]
        phi = math.atan2(ty - y, tx - x)
        want = heading_index(phi + math.pi)
        cur = heading_index(theta)
        if cur != want:
            if (want - cur) % NUM_HEADINGS <= NUM_HEADINGS // 2:
                theta = wrap_angle(theta + TURN_STEP_RAD)
                replay.append("turn_right")  # replay inverts the rotation
            else:
                theta = wrap_angle(theta - TURN_STEP_RAD)
                replay.append("turn_left")
            continue
        bx = x - FORWARD_STEP_M * math.cos(theta)
        by = y - FORWARD_STEP_M * math.sin(theta)
        bcell = point_to_cell(bx, by, s)
        ok = scene.in_bounds(*bcell) and not scene.inflated[bcell]
        if ok:
            fwd, collided = step(scene, AgentPose(bx, by, theta), "forward")
            ok = not collided
        if not ok:
            wp += 1  # waypoint unusable from here, aim further along
            continue
        x, y = bx, by
        replay.append("forward")
    replay.reverse()
    return AgentPose(x, y, wrap_angle(theta)), replay
