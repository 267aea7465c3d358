"""Trace rendering: text frames always, raster frames when matplotlib is
available. Overlay glyphs: '@' agent, '+' long-term goal, '*' visited path,
'~' frontier; base glyphs come from the map export ('?', '.', '#', category
letters)."""

from __future__ import annotations

from pathlib import Path

from .geometry import point_to_cell
from .mapping import SemanticMap, detect_frontiers


def render_frame(m: SemanticMap, records: list, upto: int | None = None) -> str:
    """One text frame of the map with the trace overlaid (records up to and
    including index `upto`, default all)."""
    rows = [list(line) for line in m.snapshot_text().split("\n")]
    if upto is None:
        upto = len(records) - 1
    shown = records[: upto + 1]
    for cell in detect_frontiers(m):
        rows[cell[0]][cell[1]] = "~"
    path_cells = []
    for rec in shown:
        if "pose" not in rec:
            continue
        x, y, _ = rec["pose"]
        path_cells.append(point_to_cell(x, y, m.cell_size))
    for (r, c) in path_cells[:-1]:
        rows[r][c] = "*"
    if shown and shown[-1].get("goal"):
        gr, gc = shown[-1]["goal"]
        rows[gr][gc] = "+"
    if path_cells:
        r, c = path_cells[-1]
        rows[r][c] = "@"
    return "\n".join("".join(row) for row in rows)


def render_trace(trace, map_log: list, out_dir=None, every_step: bool = False,
                 raster: bool = False) -> dict:
    """Render a finished trace against its per-step map snapshots.

    Always produces the final text frame; every_step adds one text frame per
    step; raster writes a PNG of the final frame when matplotlib imports.
    Returns a summary with the frames and the count of pose-changing moves
    (successful forwards).
    """
    if not map_log:
        raise ValueError("render_trace needs at least one map snapshot")
    frames = []
    if every_step:
        for i in range(len(trace.records)):
            m = map_log[min(i, len(map_log) - 1)]
            frames.append(render_frame(m, trace.records, upto=i))
    final = render_frame(map_log[-1], trace.records)
    frames.append(final)

    moves = sum(1 for rec in trace.records
                if rec.get("action") == "forward" and not rec.get("collided"))

    files = []
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if every_step:
            for i, frame in enumerate(frames[:-1]):
                p = out / f"frame_{i:04d}.txt"
                p.write_text(frame + "\n", encoding="utf-8")
                files.append(str(p))
        p = out / "frame_final.txt"
        p.write_text(final + "\n", encoding="utf-8")
        files.append(str(p))
        if raster:
            png = _render_png(map_log[-1], trace.records, out / "frame_final.png")
            if png:
                files.append(png)
    return {"frames": frames, "final": final, "forward_moves": moves, "files": files}


def _render_png(m: SemanticMap, records: list, path: Path) -> str | None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None
    import numpy as np

    img = np.full((m.height, m.width, 3), 0.55)
    img[m.state == 1] = (0.95, 0.95, 0.95)
    img[m.state == 2] = (0.15, 0.15, 0.15)
    for cells in m.channels.values():
        for (r, c) in cells:
            img[r, c] = (0.85, 0.45, 0.1)
    xs, ys = [], []
    for rec in records:
        if "pose" in rec:
            x, y, _ = rec["pose"]
            xs.append(x / m.cell_size - 0.5)
            ys.append(y / m.cell_size - 0.5)
    fig, ax = plt.subplots(figsize=(6, 6 * m.height / max(1, m.width)))
    ax.imshow(img, origin="upper")
    if xs:
        ax.plot(xs, ys, "-", color="tab:blue", linewidth=1.5)
        ax.plot(xs[-1], ys[-1], "o", color="tab:red", markersize=5)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.savefig(path, bbox_inches="tight", dpi=120)
    plt.close(fig)
    return str(path)
