"""Seeded rooms-and-corridor scene generator.

Produces small furnished scenes with one QA item each: 2-3 rooms over a
shared hallway, 3-8 objects colored from an 8-color palette, a
same-category distractor in another room at 50% probability, and question
types cycling through the five templates. Scenes use a coarser 0.25 m cell
so full sweeps stay fast; hand fixtures keep the 0.05 m default.
"""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

from .geometry import FACING_TOLERANCE_RAD, cell_center, quantize_heading
from .harness import derive_seed
from .world import GridScene, distance_to_cells, load_scene, observe, AgentPose

SUITE_CELL_SIZE = 0.25

COLORS = ("red", "blue", "green", "yellow", "white", "black", "brown", "gray")
ROOM_LABELS = ("kitchen", "bedroom", "office", "library", "study", "pantry")
QTYPES = ("color", "room", "location", "what_is", "count")

# category -> footprint (rows, cols)
FURNITURE = {
    "table": (2, 2),
    "chair": (1, 1),
    "sofa": (1, 2),
    "bed": (2, 3),
    "cabinet": (1, 2),
    "plant": (1, 1),
    "lamp": (1, 1),
    "desk": (1, 2),
    "box": (1, 1),
}
COUNTABLE = ("plant", "lamp", "box", "chair")


def plural(cat: str) -> str:
    if cat.endswith(("x", "ch", "sh", "s")):
        return cat + "es"
    return cat + "s"


class _Layout:
    def __init__(self, rng: random.Random):
        self.n_rooms = rng.choice((2, 2, 3))
        self.room_h = rng.randint(8, 10)
        widths = [rng.randint(9, 12) for _ in range(self.n_rooms)]
        self.width = 1 + sum(w + 1 for w in widths)
        corridor_h = 4
        self.corridor_r0 = self.room_h + 2
        self.height = self.room_h + corridor_h + 3
        self.grid = [["#"] * self.width for _ in range(self.height)]
        self.room_rects = []
        x0 = 1
        for w in widths:
            for r in range(1, self.room_h + 1):
                for c in range(x0, x0 + w):
                    self.grid[r][c] = "."
            self.room_rects.append((1, x0, self.room_h, x0 + w - 1))
            door = x0 + w // 2
            for c in range(door - 2, door + 3):
                self.grid[self.room_h + 1][c] = "."
            x0 += w + 1
        for r in range(self.corridor_r0, self.corridor_r0 + corridor_h):
            for c in range(1, self.width - 1):
                self.grid[r][c] = "."
        labels = rng.sample(ROOM_LABELS, self.n_rooms)
        self.rooms = [
            {"label": lab, "rect": list(rect)}
            for lab, rect in zip(labels, self.room_rects)
        ]
        self.rooms.append({
            "label": "hallway",
            "rect": [self.corridor_r0, 1, self.corridor_r0 + corridor_h - 1,
                     self.width - 2],
        })


class _Builder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.layout = _Layout(rng)
        self.objects = []
        self._taken: set = set()

    def _room_interior(self, room_idx: int, size) -> list:
        r0, c0, r1, c1 = self.layout.room_rects[room_idx]
        h, w = size
        # 2-cell margin from room walls keeps inflation from choking paths
        return [(r, c)
                for r in range(r0 + 2, r1 - h + 1 - 1)
                for c in range(c0 + 2, c1 - w + 1 - 1)]

    def place(self, oid: str, category: str, room_idx: int, color: str,
              solid: bool = True, extra_attrs: dict | None = None) -> bool:
        size = FURNITURE[category]
        h, w = size
        spots = self._room_interior(room_idx, size)
        self.rng.shuffle(spots)
        for (r, c) in spots:
            cells = [(rr, cc) for rr in range(r, r + h) for cc in range(c, c + w)]
            pad = {(rr, cc)
                   for rr in range(r - 2, r + h + 2)
                   for cc in range(c - 2, c + w + 2)}
            if pad & self._taken:
                continue
            self._taken.update(cells)
            if solid:
                for (rr, cc) in cells:
                    self.layout.grid[rr][cc] = "#"
            attrs = {"color": color}
            if extra_attrs:
                attrs.update(extra_attrs)
            cx = (c + w / 2.0) * SUITE_CELL_SIZE
            cy = (r + h / 2.0) * SUITE_CELL_SIZE
            self.objects.append({
                "id": oid, "category": category, "attributes": attrs,
                "cells": cells, "center": [cx, cy],
            })
            return True
        return False

    def place_on_object(self, oid: str, category: str, base: dict, color: str) -> bool:
        """Flat companion object on the free cell under the base's footprint
        center (the side end poses approach from)."""
        rows = [rc[0] for rc in base["cells"]]
        cols = [rc[1] for rc in base["cells"]]
        r = max(rows) + 1
        c = (min(cols) + max(cols)) // 2
        if self.layout.grid[r][c] != "." or (r, c) in self._taken:
            return False
        self._taken.add((r, c))
        self.objects.append({
            "id": oid, "category": category,
            "attributes": {"color": color, "on": base["id"]},
            "cells": [[r, c]],
            "center": [(c + 0.5) * SUITE_CELL_SIZE, (r + 0.5) * SUITE_CELL_SIZE],
        })
        return True

    def scene_dict(self) -> dict:
        return {
            "cell_size": SUITE_CELL_SIZE,
            "grid": ["".join(row) for row in self.layout.grid],
            "objects": self.objects,
            "rooms": self.layout.rooms,
            "qa": [],
        }


def _find_end_pose(scene: GridScene, target: dict, need_visible_id: str | None):
    """First candidate cell near the target where the memory rule fires:
    free, outside inflation, within 1 m geodesic, line of sight, facing the
    center after heading quantization."""
    rows = [rc[0] for rc in target["cells"]]
    cols = [rc[1] for rc in target["cells"]]
    cx, cy = target["center"]
    cand = []
    for r in range(min(rows) - 5, max(rows) + 6):
        for c in range(min(cols) - 5, max(cols) + 6):
            if not scene.is_free(r, c) or scene.inflated[r, c]:
                continue
            px, py = cell_center(r, c, scene.cell_size)
            cand.append((math.hypot(px - cx, py - cy), r, c))
    cand.sort()
    footprint = [tuple(rc) for rc in target["cells"]]
    for _, r, c in cand:
        px, py = cell_center(r, c, scene.cell_size)
        theta = quantize_heading(math.atan2(cy - py, cx - px))
        pose = AgentPose(px, py, theta)
        if distance_to_cells(scene, (r, c), footprint) > 0.95:
            continue
        obs = observe(scene, pose)
        hit = False
        companion_seen = need_visible_id is None
        for contact in obs.contacts:
            if contact.instance_id == target["id"]:
                if (contact.range_m <= 0.95
                        and abs(contact.bearing) <= FACING_TOLERANCE_RAD + 1e-12):
                    hit = True
            if contact.instance_id == need_visible_id:
                companion_seen = True
        if hit and companion_seen:
            return pose
    return None


def generate_scene(seed: int, index: int) -> GridScene:
    """Deterministic scene #index of the suite keyed by seed."""
    rng = random.Random(derive_seed(seed, "scene", index))
    qtype = QTYPES[index % len(QTYPES)]
    for _ in range(40):
        scene = _try_generate(rng, qtype, f"scene_{index:03d}")
        if scene is not None:
            return scene
    raise RuntimeError(f"could not generate a valid scene for seed={seed} index={index}")


def _try_generate(rng: random.Random, qtype: str, scene_id: str) -> GridScene | None:
    b = _Builder(rng)
    n_rooms = b.layout.n_rooms

    if qtype == "what_is":
        target_cat = "table"
    elif qtype == "count":
        target_cat = rng.choice(COUNTABLE)
    else:
        target_cat = rng.choice(sorted(FURNITURE))
    target_room = rng.randrange(n_rooms)
    target_color = rng.choice(COLORS)
    if not b.place("obj_target", target_cat, target_room, target_color):
        return None
    target = b.objects[-1]

    companion_id = None
    if qtype == "what_is":
        if not b.place_on_object("obj_on", "vase", target,
                                 rng.choice([c for c in COLORS if c != target_color])):
            return None
        companion_id = "obj_on"

    distractor = qtype != "count" and n_rooms >= 2 and rng.random() < 0.5
    if distractor:
        other_rooms = [i for i in range(n_rooms) if i != target_room]
        d_color = rng.choice([c for c in COLORS if c != target_color])
        if not b.place("obj_distractor", target_cat, rng.choice(other_rooms), d_color):
            return None

    # 3-8 objects per scene including target/companion/distractor
    filler_cats = [c for c in sorted(FURNITURE)
                   if c != target_cat and c != "vase"]
    placed, want, attempts = 0, rng.randint(2, 4), 0
    while placed < want and attempts < 20:
        attempts += 1
        cat = rng.choice(filler_cats)
        if b.place(f"obj_filler{placed}", cat, rng.randrange(n_rooms),
                   rng.choice(COLORS)):
            placed += 1
    if len(b.objects) < 3:
        return None

    data = b.scene_dict()
    try:
        scene = load_scene(json.dumps(data), scene_id=scene_id)
    except Exception:
        return None

    room_label = scene.room_of_point(*target["center"])
    if room_label is None:
        return None
    if qtype == "color":
        if distractor or rng.random() < 0.5:
            question = f"What color is the {target_cat} in the {room_label}?"
        else:
            question = f"What color is the {target_cat}?"
        answer = target_color
    elif qtype == "room":
        if distractor:
            question = f"What room is the {target_color} {target_cat} in?"
        else:
            question = f"What room is the {target_cat} in?"
        answer = room_label
    elif qtype == "location":
        if distractor:
            question = f"Where is the {target_color} {target_cat}?"
        else:
            question = f"Where is the {target_cat}?"
        answer = f"room {room_label}"
    elif qtype == "what_is":
        if distractor:
            question = f"What is on the {target_cat} in the {room_label}?"
        else:
            question = f"What is on the {target_cat}?"
        answer = "vase"
    else:
        question = f"How many {plural(target_cat)} are there?"
        answer = "1"

    end = _find_end_pose(scene, target, companion_id)
    if end is None:
        return None
    data["qa"] = [{
        "question": question,
        "answer": answer,
        "target_id": target["id"],
        "end_pose": [end.x, end.y, math.degrees(end.theta)],
        "type": qtype,
    }]
    try:
        return load_scene(json.dumps(data), scene_id=scene_id)
    except Exception:
        return None


def generate_suite(n: int, seed: int) -> list:
    return [generate_scene(seed, i) for i in range(n)]


def gen_suite_files(n: int, seed: int, out_dir) -> dict:
    """Write n scene files plus a manifest; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(n):
        scene = generate_scene(seed, i)
        name = f"{scene.scene_id}.json"
        (out / name).write_text(_scene_to_json(scene), encoding="utf-8")
        names.append(name)
    manifest = {"v": 1, "seed": seed, "count": n, "scenes": names}
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def _scene_to_json(scene: GridScene) -> str:
    grid = []
    for r in range(scene.height):
        grid.append("".join("#" if scene.obstacles[r, c] else "."
                            for c in range(scene.width)))
    data = {
        "cell_size": scene.cell_size,
        "grid": grid,
        "objects": [
            {"id": o.id, "category": o.category, "attributes": o.attributes,
             "cells": sorted([list(rc) for rc in o.footprint]),
             "center": list(o.center)}
            for o in scene.objects
        ],
        "rooms": [{"label": lab, "rect": list(rect)} for lab, rect in scene.rooms],
        "qa": [
            {"question": q.question, "answer": q.answer,
             "target_id": q.target_instance_id,
             "end_pose": [q.end_pose.x, q.end_pose.y, math.degrees(q.end_pose.theta)],
             "type": q.question_type}
            for q in scene.qa_items
        ],
    }
    return json.dumps(data, indent=1, sort_keys=True) + "\n"
