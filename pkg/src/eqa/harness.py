"""Episode runner wiring the world, mapper, planner and oracles together,
plus metrics, configuration sweeps and JSONL traces."""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field

from .mapping import DetectionModel, SemanticMap, detect_frontiers, update_map
from .oracles import OracleConfig, OracleError, build_oracle, make_snapshot
from .planner import (
    ExplorationComplete,
    PlannerState,
    StopPolicy,
    check_stop,
    maybe_memorize,
    next_action,
)
from .world import (
    AgentPose,
    GridScene,
    NoPathError,
    QAItem,
    make_start,
    observe,
    shortest_path,
    step,
)

OFFSET_LABELS = {"t10": "T-10", "t30": "T-30", "t50": "T-50", "random": "random"}


def derive_seed(*parts) -> int:
    """Stable sub-seed from arbitrary key parts (order matters, not call order)."""
    return zlib.crc32("|".join(str(p) for p in parts).encode("utf-8")) & 0x7FFFFFFF


def normalize_answer(text: str) -> str:
    """Comparison form: lowercase, trimmed, terminal punctuation and a
    leading article stripped, whitespace collapsed."""
    t = " ".join(str(text).strip().lower().split())
    t = t.rstrip(".?!,;:")
    for article in ("the ", "an ", "a "):
        if t.startswith(article):
            t = t[len(article):]
            break
    return t.strip()


@dataclass
class EpisodeConfig:
    alpha: float = 0.2
    beta: float = 0.1
    start_offset: str = "t10"
    seed: int = 0
    max_steps: int = 100
    replan_interval: int = 25
    oracle: OracleConfig = field(default_factory=OracleConfig)
    start_pose: AgentPose | None = None  # explicit override, mainly for fixtures

    def header(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "offset": self.start_offset,
            "seed": self.seed,
            "max_steps": self.max_steps,
            "replan_interval": self.replan_interval,
            "oracle": self.oracle.mode,
        }


@dataclass
class EpisodeResult:
    scene_id: str
    qa_index: int
    predicted_answer: str
    gt_answer: str
    correct: bool
    dist_to_target_m: float  # inf when the answer pose cannot reach the end pose
    steps: int
    collisions: int
    stop_reason: str | None
    answer_pose: AgentPose | None
    start_distance_m: float
    best_itm_score: float | None
    error: str | None = None


@dataclass
class Trace:
    header: dict
    records: list

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True, separators=(",", ":"))]
        lines.extend(
            json.dumps(rec, sort_keys=True, separators=(",", ":"))
            for rec in self.records
        )
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())


def _qa_index(scene: GridScene, qa: QAItem) -> int:
    for i, item in enumerate(scene.qa_items):
        if item is qa or item == qa:
            return i
    return -1


def _start_distance(scene: GridScene, start: AgentPose, qa: QAItem) -> float:
    try:
        return shortest_path(scene, start, qa.end_pose)[1]
    except NoPathError:
        return math.inf


def run_episode(scene: GridScene, qa: QAItem, config: EpisodeConfig,
                map_log: list | None = None) -> tuple[EpisodeResult, Trace]:
    """Run one full episode: parse the question, explore and map until a
    stop rule fires, then answer from the best-scored memory snapshot (or
    the final observation when memory is empty).

    Oracle failures become error results, never crashes. When map_log is a
    list it receives a SemanticMap copy per step for rendering.
    """
    oracle = build_oracle(config.oracle)
    qa_index = _qa_index(scene, qa)
    trace = Trace(
        header={"v": 1, "scene_id": scene.scene_id, "qa_id": qa_index,
                "config": config.header()},
        records=[],
    )

    def error_result(msg: str, state: PlannerState | None, collisions: int) -> EpisodeResult:
        trace.records.append({
            "step": state.total_steps if state else 0,
            "action": "stop", "collided": False, "error": msg, "stop_reason": None,
        })
        return EpisodeResult(
            scene_id=scene.scene_id, qa_index=qa_index,
            predicted_answer="", gt_answer=qa.answer, correct=False,
            dist_to_target_m=math.inf,
            steps=state.total_steps if state else 0,
            collisions=collisions, stop_reason=None, answer_pose=None,
            start_distance_m=math.inf,
            best_itm_score=state.best_itm() if state else None,
            error=msg,
        )

    try:
        parse = oracle.parse_question(qa.question)
    except OracleError as e:
        return error_result(f"parse_question: {e}", None, 0), trace

    start = config.start_pose or make_start(scene, qa, config.start_offset, config.seed)
    start_dist = _start_distance(scene, start, qa)

    pose = start
    m = SemanticMap.blank_like(scene)
    state = PlannerState.seeded(derive_seed(config.seed, scene.scene_id, qa_index))
    policy = StopPolicy(max_steps=config.max_steps,
                        replan_interval=config.replan_interval, beta=config.beta)
    det = DetectionModel(config.alpha)
    snapshots: dict[int, object] = {}
    collisions = 0
    last_obs = None
    stop_reason = None

    while True:
        obs = observe(scene, pose, step_index=state.total_steps)
        last_obs = obs
        update_map(m, pose, obs, det)
        if map_log is not None:
            map_log.append(_copy_map(m))

        cache: dict[str, object] = {}

        def provider():
            if "snap" not in cache:
                cache["snap"] = make_snapshot(scene, pose, obs, state.total_steps)
            return cache["snap"]

        try:
            maybe_memorize(pose, obs, provider, parse.target_category,
                           oracle.itm_score, parse.declarative,
                           state.memory, state.total_steps)
        except OracleError as e:
            return error_result(f"itm at step {state.total_steps}: {e}", state, collisions), trace
        if "snap" in cache:
            snapshots[state.total_steps] = cache["snap"]

        frontier_count = len(detect_frontiers(m))
        base_record = {
            "step": state.total_steps,
            "pose": [pose.x, pose.y, pose.theta],
            "frontier_count": frontier_count,
            "memory_size": len(state.memory),
            "best_itm": state.best_itm(),
        }

        reason = check_stop(state, policy)
        if reason is None:
            try:
                action = next_action(m, pose, state, policy, parse.target_category)
            except ExplorationComplete:
                reason = "map_exhausted"
        if reason is not None:
            stop_reason = reason
            goal = state.long_term_goal
            trace.records.append({**base_record, "action": "stop", "collided": False,
                                  "goal": list(goal) if goal else None,
                                  "mode": state.mode, "stop_reason": reason})
            break

        new_pose, collided = step(scene, pose, action)
        if collided:
            collisions += 1
        state.last_collided = collided
        goal = state.long_term_goal
        trace.records.append({**base_record, "action": action, "collided": collided,
                              "goal": list(goal) if goal else None,
                              "mode": state.mode})
        state.total_steps += 1
        state.steps_since_replan += 1
        pose = new_pose

    if state.memory:
        best = min(state.memory, key=lambda e: (-e.itm_score, e.step_index))
        answer_snap = snapshots[best.snapshot_ref]
        answer_pose = best.pose
    else:
        answer_snap = make_snapshot(scene, pose, last_obs, state.total_steps)
        answer_pose = pose
    try:
        predicted = oracle.vqa_answer(answer_snap, qa.question)
    except OracleError as e:
        return error_result(f"vqa: {e}", state, collisions), trace

    try:
        d_t = shortest_path(scene, answer_pose, qa.end_pose)[1]
    except NoPathError:
        d_t = math.inf

    result = EpisodeResult(
        scene_id=scene.scene_id, qa_index=qa_index,
        predicted_answer=predicted, gt_answer=qa.answer,
        correct=normalize_answer(predicted) == normalize_answer(qa.answer),
        dist_to_target_m=d_t,
        steps=state.total_steps,
        collisions=collisions,
        stop_reason=stop_reason,
        answer_pose=answer_pose,
        start_distance_m=start_dist,
        best_itm_score=state.best_itm(),
    )
    return result, trace


def run_vqa_only(scene: GridScene, qa: QAItem, config: EpisodeConfig) -> EpisodeResult:
    """Baseline: answer from the start observation without moving. Its
    distance to target equals the start offset distance by construction."""
    oracle = build_oracle(config.oracle)
    qa_index = _qa_index(scene, qa)
    start = config.start_pose or make_start(scene, qa, config.start_offset, config.seed)
    start_dist = _start_distance(scene, start, qa)
    try:
        obs = observe(scene, start, step_index=0)
        snap = make_snapshot(scene, start, obs, 0)
        predicted = oracle.vqa_answer(snap, qa.question)
    except OracleError as e:
        return EpisodeResult(scene.scene_id, qa_index, "", qa.answer, False,
                             math.inf, 0, 0, None, None, start_dist, None,
                             error=str(e))
    return EpisodeResult(
        scene_id=scene.scene_id, qa_index=qa_index,
        predicted_answer=predicted, gt_answer=qa.answer,
        correct=normalize_answer(predicted) == normalize_answer(qa.answer),
        dist_to_target_m=start_dist,
        steps=0, collisions=0, stop_reason="vqa_only",
        answer_pose=start, start_distance_m=start_dist,
        best_itm_score=None,
    )


def _copy_map(m: SemanticMap) -> SemanticMap:
    return SemanticMap(
        width=m.width, height=m.height, cell_size=m.cell_size,
        state=m.state.copy(),
        channels={k: set(v) for k, v in m.channels.items()},
        provenance=dict(m.provenance),
    )


# ---------------------------------------------------------------------------
# Metrics and sweeps

def compute_metrics(results: list, strict: bool = False) -> dict:
    """Aggregate top-1 accuracy, mean distance to target (finite values
    only) and the fraction of episodes with at least one collision. With
    strict=True also reports strict success: a correct answer delivered
    without any collision."""
    if not results:
        raise ValueError("compute_metrics needs a non-empty result list")
    top1 = sum(1 for r in results if r.correct) / len(results)
    finite = [r.dist_to_target_m for r in results if math.isfinite(r.dist_to_target_m)]
    mean_d_t = sum(finite) / len(finite) if finite else math.inf
    collision_rate = sum(1 for r in results if r.collisions > 0) / len(results)
    out = {"top1": top1, "mean_d_T": mean_d_t, "collision_rate": collision_rate}
    if strict:
        out["strict_success"] = sum(
            1 for r in results if r.correct and r.collisions == 0) / len(results)
    return out


@dataclass
class SweepRow:
    method: str
    cells: dict  # offset -> metrics dict (plus episode/error counts)


@dataclass
class SweepResult:
    seed: int
    grid: list
    offsets: list
    rows: list
    # (method, offset) -> [EpisodeResult]; empty when not retained
    episodes: dict

    def table(self) -> str:
        return format_results_table(self.rows, self.offsets)

    def to_json(self) -> dict:
        return {
            "v": 1,
            "seed": self.seed,
            "grid": [list(g) for g in self.grid],
            "offsets": list(self.offsets),
            "rows": [
                {"method": row.method,
                 "cells": {off: _json_metrics(row.cells[off]) for off in self.offsets}}
                for row in self.rows
            ],
        }


def _json_metrics(mx: dict) -> dict:
    out = dict(mx)
    if not math.isfinite(out.get("mean_d_T", 0.0)):
        out["mean_d_T"] = None
    return out


def episode_seed(seed: int, scene_id: str, qa_index: int, offset: str) -> int:
    """Per-episode seed. Independent of (alpha, beta) so trajectories are
    comparable across grid points, and of completion order."""
    return derive_seed(seed, scene_id, qa_index, offset)


def run_sweep(scenes: list, grid: list, offsets: list, seed: int,
              include_baseline: bool = False,
              oracle: OracleConfig | None = None,
              keep_episodes: bool = True,
              strict: bool = False) -> SweepResult:
    """Cross product of (alpha, beta) x offsets over every QA item of every
    scene. Per-episode errors are aggregated into the cell's error count;
    the sweep completes regardless. Output ordering is fixed by keys, never
    by completion order."""
    oracle = oracle or OracleConfig()
    rows: list[SweepRow] = []
    episodes: dict = {}

    def cell_metrics(results: list) -> dict:
        ok = [r for r in results if r.error is None]
        errors = len(results) - len(ok)
        if ok:
            mx = compute_metrics(ok, strict=strict)
        else:
            mx = {"top1": 0.0, "mean_d_T": math.inf, "collision_rate": 0.0}
        mx["episodes"] = len(results)
        mx["errors"] = errors
        mx["mean_start_m"] = (
            sum(r.start_distance_m for r in ok if math.isfinite(r.start_distance_m))
            / max(1, sum(1 for r in ok if math.isfinite(r.start_distance_m))))
        return mx

    def add_row(method: str, runner) -> None:
        cells = {}
        for offset in offsets:
            results = []
            for scene in scenes:
                for qi, qa in enumerate(scene.qa_items):
                    results.append(runner(scene, qa, qi, offset))
            cells[offset] = cell_metrics(results)
            if keep_episodes:
                episodes[(method, offset)] = results
        rows.append(SweepRow(method=method, cells=cells))

    if include_baseline:
        def baseline(scene, qa, qi, offset):
            cfg = EpisodeConfig(
                start_offset=offset, oracle=oracle,
                seed=episode_seed(seed, scene.scene_id, qi, offset))
            return run_vqa_only(scene, qa, cfg)
        add_row("VQA only", baseline)

    for alpha, beta in grid:
        def ours(scene, qa, qi, offset, alpha=alpha, beta=beta):
            cfg = EpisodeConfig(
                alpha=alpha, beta=beta, start_offset=offset, oracle=oracle,
                seed=episode_seed(seed, scene.scene_id, qi, offset))
            return run_episode(scene, qa, cfg)[0]
        add_row(f"ours ({alpha}, {beta})", ours)

    return SweepResult(seed=seed, grid=list(grid), offsets=list(offsets),
                       rows=rows, episodes=episodes)


def format_results_table(rows: list, offsets: list) -> str:
    """Fixed-layout results table: one method per row, distance-to-target
    columns per offset then top-1 columns per offset."""
    headers = ["Method"]
    headers += [f"d_T {OFFSET_LABELS.get(o, o)}" for o in offsets]
    headers += [f"Top-1 {OFFSET_LABELS.get(o, o)}" for o in offsets]
    body = []
    for row in rows:
        line = [row.method]
        for off in offsets:
            d = row.cells[off].get("mean_d_T")
            line.append("-" if d is None or not math.isfinite(d) else f"{d:.2f}")
        for off in offsets:
            line.append(f"{row.cells[off]['top1']:.3f}")
        body.append(line)
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h)
              for i, h in enumerate(headers)]
    def fmt(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
    rule = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([fmt(headers), rule] + [fmt(b) for b in body])
