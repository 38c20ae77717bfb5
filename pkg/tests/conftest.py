from __future__ import annotations

import pytest

from tippy.app import build_app
from tippy.engine import JobEngine
from tippy.world import seed_world


@pytest.fixture
def world():
    return seed_world()


@pytest.fixture
def engine(world):
    return JobEngine(world, seed=7)


@pytest.fixture
def app(tmp_path):
    return build_app(data_dir=tmp_path / "data", seed=7)
