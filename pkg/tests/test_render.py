import pytest

from eqa.harness import EpisodeConfig, run_episode
from eqa.render import render_frame, render_trace


def run_with_maps(scene, qa_index=0, **cfg):
    qa = scene.qa_items[qa_index]
    map_log = []
    config = EpisodeConfig(**cfg)
    result, trace = run_episode(scene, qa, config, map_log=map_log)
    return result, trace, map_log


def test_one_step_trace_single_frame_with_agent_marker(tworoom):
    _, trace, maps = run_with_maps(tworoom, seed=3, start_offset="t10",
                                   max_steps=0)
    assert len(trace.records) == 1
    out = render_trace(trace, maps)
    assert out["frames"][-1].count("@") == 1
    assert out["forward_moves"] == 0


def test_forward_moves_match_pose_changes(tworoom):
    _, trace, maps = run_with_maps(tworoom, seed=3, start_offset="t30",
                                   alpha=0.2, beta=0.1)
    out = render_trace(trace, maps)
    poses = [tuple(rec["pose"][:2]) for rec in trace.records]
    pose_changes = sum(1 for a, b in zip(poses, poses[1:]) if a != b)
    assert out["forward_moves"] == pose_changes
    assert out["forward_moves"] == sum(
        1 for rec in trace.records
        if rec["action"] == "forward" and not rec["collided"])


def test_frame_dimensions_and_overlays(tworoom):
    _, trace, maps = run_with_maps(tworoom, seed=3, start_offset="t10",
                                   alpha=0.2, beta=0.1)
    frame = render_frame(maps[-1], trace.records)
    lines = frame.split("\n")
    assert len(lines) == tworoom.height
    assert all(len(line) == tworoom.width for line in lines)
    assert "@" in frame


def test_render_writes_files(tworoom, tmp_path):
    _, trace, maps = run_with_maps(tworoom, seed=3, start_offset="t10",
                                   alpha=0.2, beta=0.1)
    out = render_trace(trace, maps, out_dir=tmp_path, every_step=True)
    assert (tmp_path / "frame_final.txt").exists()
    assert len(out["frames"]) == len(trace.records) + 1
    assert len(list(tmp_path.glob("frame_*.txt"))) == len(trace.records) + 1


def test_render_png_when_matplotlib_available(tworoom, tmp_path):
    pytest.importorskip("matplotlib")
    _, trace, maps = run_with_maps(tworoom, seed=3, start_offset="t10",
                                   max_steps=5)
    out = render_trace(trace, maps, out_dir=tmp_path, raster=True)
    assert (tmp_path / "frame_final.png").exists()
