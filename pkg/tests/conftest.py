from __future__ import annotations

import pytest

from embodiedqa.config import Config
from embodiedqa.kb import default_kb
from embodiedqa.scene.layout import generate_layouts
from embodiedqa.scene.world import generate_scene


@pytest.fixture(scope="session")
def kb():
    return default_kb()


@pytest.fixture(scope="session")
def layouts():
    return generate_layouts(0, 1)


@pytest.fixture(scope="session")
def scenes(layouts):
    """One small scene per room type."""
    return [generate_scene(layout, 0) for layout in layouts]


@pytest.fixture(scope="session")
def bedroom(scenes):
    return next(s for s in scenes if s.room_type == "Bedroom")


@pytest.fixture(scope="session")
def world():
    from embodiedqa.harness.world import build_world
    return build_world()


@pytest.fixture(scope="session")
def train_priors(world):
    from embodiedqa.priors import build_priors
    return build_priors(world.train)


@pytest.fixture(scope="session")
def train_dataset(world, kb):
    from embodiedqa.questions.dataset import build_dataset
    return build_dataset(world.train, kb, "KEQA", seed=0)


@pytest.fixture(scope="session")
def test_dataset(world, kb):
    from embodiedqa.questions.dataset import build_dataset
    return build_dataset(world.test, kb, "KEQA", seed=1)


@pytest.fixture
def cfg():
    return Config()


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    """Record one pass/fail line per acceptance criterion; lines are echoed at the end of the run."""
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
