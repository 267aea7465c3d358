"""Regenerates the committed fixture scenes. Run from the repo root:

    python3 tests/fixtures/make_fixtures.py
"""

import json
from pathlib import Path

HERE = Path(__file__).parent


def corridor():
    width, height = 86, 5
    grid = [["#"] * width for _ in range(height)]
    for r in (1, 2, 3):
        for c in range(1, width - 1):
            grid[r][c] = "."
    table = [[1, 80], [1, 81], [2, 80], [2, 81]]
    for r, c in table:
        grid[r][c] = "#"
    return {
        "cell_size": 0.05,
        "grid": ["".join(row) for row in grid],
        "objects": [
            {"id": "table_1", "category": "table",
             "attributes": {"color": "brown"},
             "cells": table, "center": [4.05, 0.10]},
        ],
        "rooms": [{"label": "hall", "rect": [1, 1, 3, 84]}],
        "qa": [
            {"question": "What color is the table?", "answer": "brown",
             "target_id": "table_1", "end_pose": [3.575, 0.125, 0.0],
             "type": "color"},
        ],
    }


def tworoom():
    grid = [
        "############",
        "#....#.....#",
        "#....#.....#",
        "#....#.....#",
        "#..........#",
        "#..........#",
        "#..........#",
        "#....#.....#",
        "#....#.....#",
        "#....#.....#",
        "#....#.....#",
        "############",
    ]
    rows = [list(r) for r in grid]
    cab = [[9, 2], [9, 3]]
    sofa = [[9, 7], [9, 8]]
    for r, c in cab + sofa:
        rows[r][c] = "#"
    return {
        "cell_size": 0.25,
        "grid": ["".join(r) for r in rows],
        "objects": [
            {"id": "cab_kitchen", "category": "cabinet",
             "attributes": {"color": "brown"},
             "cells": cab, "center": [0.75, 2.375]},
            {"id": "sofa_bed", "category": "sofa",
             "attributes": {"color": "blue"},
             "cells": sofa, "center": [2.0, 2.375]},
            {"id": "plant_bed", "category": "plant",
             "attributes": {"color": "green"},
             "cells": [[2, 8]], "center": [2.125, 0.625]},
        ],
        "rooms": [
            {"label": "kitchen", "rect": [1, 1, 10, 4]},
            {"label": "bedroom", "rect": [1, 6, 10, 10]},
        ],
        "qa": [
            {"question": "What color are the cabinets in the kitchen?",
             "answer": "brown", "target_id": "cab_kitchen",
             "end_pose": [0.625, 1.875, 90.0], "type": "color"},
            {"question": "Where is the plant?", "answer": "room bedroom",
             "target_id": "plant_bed", "end_pose": [2.125, 1.125, 270.0],
             "type": "location"},
        ],
    }


def sealed():
    width, height = 16, 16
    grid = [["#"] * width for _ in range(height)]
    for r in range(1, 5):
        for c in range(1, 7):
            grid[r][c] = "."
    for r in range(1, 5):
        for c in range(8, 15):
            grid[r][c] = "."
    for r in range(6, 15):
        for c in range(1, 15):
            grid[r][c] = "."
    for r in range(1, 6):
        grid[r][7] = "#"
    for c in range(7, 16):
        grid[5][c] = "#"
    table = [[2, 10], [2, 11]]
    for r, c in table:
        grid[r][c] = "#"
    return {
        "cell_size": 0.25,
        "grid": ["".join(row) for row in grid],
        "objects": [
            {"id": "table_sealed", "category": "table",
             "attributes": {"color": "white"},
             "cells": table, "center": [2.75, 0.625]},
        ],
        "rooms": [
            {"label": "vault", "rect": [1, 8, 4, 14]},
            {"label": "hall", "rect": [6, 1, 14, 14]},
        ],
        "qa": [
            {"question": "What color is the table?", "answer": "white",
             "target_id": "table_sealed", "end_pose": [2.625, 0.875, 300.0],
             "type": "color"},
        ],
    }


def main():
    for name, build in (("corridor", corridor), ("tworoom", tworoom),
                        ("sealed", sealed)):
        path = HERE / f"{name}.json"
        path.write_text(json.dumps(build(), indent=1) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
