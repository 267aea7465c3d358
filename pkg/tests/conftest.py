import json
from pathlib import Path

import pytest

from eqa.world import GridScene, load_scene, load_scene_file

FIXTURES = Path(__file__).parent / "fixtures"


def build_scene(grid, objects=(), rooms=(), qa=(), cell_size=0.05,
                scene_id="inline") -> GridScene:
    return load_scene(json.dumps({
        "cell_size": cell_size,
        "grid": list(grid),
        "objects": list(objects),
        "rooms": list(rooms),
        "qa": list(qa),
    }), scene_id=scene_id)


@pytest.fixture(scope="session")
def corridor() -> GridScene:
    return load_scene_file(FIXTURES / "corridor.json")


@pytest.fixture(scope="session")
def tworoom() -> GridScene:
    return load_scene_file(FIXTURES / "tworoom.json")


@pytest.fixture(scope="session")
def sealed() -> GridScene:
    return load_scene_file(FIXTURES / "sealed.json")
