"""The desk-scale world: layouts, scenes and their train/test split."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..config import SceneConfig
from ..scene.layout import generate_layouts
from ..scene.world import generate_scene


@dataclass
class World:
    train: list = field(default_factory=list)
    test: list = field(default_factory=list)

    def scenes(self) -> dict:
        return {s.scene_id: s for s in self.train + self.test}


def layout_index(layout_id: str) -> int:
    return int(layout_id.rsplit("_", 1)[1])


def build_world(seed: int = 0, layouts_per_type: int = 6, seeds_per_layout: int = 10,
                test_layouts: int = 1, cfg: SceneConfig | None = None) -> World:
    """The last ``test_layouts`` layouts of each room type hold the test scenes."""
    world = World()
    for layout in generate_layouts(seed, layouts_per_type, cfg):
        test = layout_index(layout.layout_id) >= layouts_per_type - test_layouts
        for s in range(seeds_per_layout):
            (world.test if test else world.train).append(generate_scene(layout, s, cfg))
    return world
