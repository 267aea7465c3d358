"""Command line interface.

    eqa run --scene F [--qa-id K] --alpha A --beta B --offset t10 --seed S
            [--oracle mock|remote] [--trace out.jsonl] [--render dir/]
    eqa sweep --scenes DIR --grid "0.3:0.0,0.2:0.1,0.1:0.2"
              --offsets t10,t30,t50,random --seed S --out results.json
              [--baseline vqa-only]
    eqa validate --scene F
    eqa gen-suite --n 50 --seed S --out DIR
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .harness import EpisodeConfig, run_episode, run_sweep
from .oracles import OracleConfig
from .render import render_trace
from .suite import gen_suite_files
from .world import SceneError, load_scene_file


def _parse_grid(text: str) -> list:
    grid = []
    for part in text.split(","):
        a, b = part.split(":")
        grid.append((float(a), float(b)))
    return grid


def _result_json(result) -> dict:
    return {
        "scene": result.scene_id,
        "qa": result.qa_index,
        "predicted": result.predicted_answer,
        "gt": result.gt_answer,
        "correct": result.correct,
        "d_T": result.dist_to_target_m if math.isfinite(result.dist_to_target_m) else None,
        "steps": result.steps,
        "collisions": result.collisions,
        "stop_reason": result.stop_reason,
        "start_distance": (result.start_distance_m
                           if math.isfinite(result.start_distance_m) else None),
        "error": result.error,
    }


def cmd_run(args) -> int:
    scene = load_scene_file(args.scene)
    if not scene.qa_items:
        print(f"error: scene {scene.scene_id} has no qa items", file=sys.stderr)
        return 1
    if not (0 <= args.qa_id < len(scene.qa_items)):
        print(f"error: qa id {args.qa_id} out of range", file=sys.stderr)
        return 1
    qa = scene.qa_items[args.qa_id]
    config = EpisodeConfig(
        alpha=args.alpha, beta=args.beta, start_offset=args.offset, seed=args.seed,
        oracle=OracleConfig(mode=args.oracle, endpoint=args.endpoint),
    )
    map_log = [] if args.render else None
    result, trace = run_episode(scene, qa, config, map_log=map_log)
    if args.trace:
        trace.write(args.trace)
    if args.render:
        render_trace(trace, map_log, out_dir=args.render, raster=True)
    print(json.dumps(_result_json(result), indent=2, sort_keys=True))
    return 0 if result.error is None else 1


def cmd_sweep(args) -> int:
    scene_dir = Path(args.scenes)
    paths = sorted(p for p in scene_dir.glob("*.json") if p.name != "manifest.json")
    if not paths:
        print(f"error: no scene files in {scene_dir}", file=sys.stderr)
        return 1
    scenes = [load_scene_file(p) for p in paths]
    result = run_sweep(
        scenes,
        grid=_parse_grid(args.grid),
        offsets=args.offsets.split(","),
        seed=args.seed,
        include_baseline=args.baseline == "vqa-only",
        oracle=OracleConfig(mode=args.oracle, endpoint=args.endpoint),
        keep_episodes=False,
        strict=args.strict,
    )
    table = result.table()
    if args.out:
        Path(args.out).write_text(
            json.dumps(result.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        Path(args.out).with_suffix(".txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0


def cmd_validate(args) -> int:
    try:
        scene = load_scene_file(args.scene)
    except SceneError as e:
        print(f"INVALID: {e}", file=sys.stderr)
        return 1
    print(f"OK: {scene.scene_id} ({scene.width}x{scene.height} cells, "
          f"{len(scene.objects)} objects, {len(scene.qa_items)} qa)")
    return 0


def cmd_gen_suite(args) -> int:
    manifest = gen_suite_files(args.n, args.seed, args.out)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="eqa",
        description="Frontier-exploration embodied question answering on 2D gridworlds.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run a single episode")
    p.add_argument("--scene", required=True)
    p.add_argument("--qa-id", type=int, default=0, help="0-based qa index")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--offset", choices=("t10", "t30", "t50", "random"), default="t10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", choices=("mock", "remote"), default="mock")
    p.add_argument("--endpoint", default=None, help="remote oracle base URL")
    p.add_argument("--trace", default=None, help="write a JSONL trace here")
    p.add_argument("--render", default=None, help="write render frames here")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="run a configuration sweep")
    p.add_argument("--scenes", required=True, help="directory of scene files")
    p.add_argument("--grid", default="0.3:0.0,0.2:0.1,0.1:0.2",
                   help="comma-separated alpha:beta pairs")
    p.add_argument("--offsets", default="t10,t30,t50,random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write results JSON here")
    p.add_argument("--baseline", choices=("vqa-only",), default=None)
    p.add_argument("--strict", action="store_true",
                   help="also report correct-without-collision success")
    p.add_argument("--oracle", choices=("mock", "remote"), default="mock")
    p.add_argument("--endpoint", default=None)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("validate", help="check a scene file")
    p.add_argument("--scene", required=True)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("gen-suite", help="generate a scene suite")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_suite)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
