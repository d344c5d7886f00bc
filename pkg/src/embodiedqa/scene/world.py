"""Scenes: a layout plus sampled pickupable objects."""
from __future__ import annotations

import json
import logging
import zlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from ..catalog import CATEGORY_INDEX, category, is_container, is_surface
from ..config import RelationConfig, SceneConfig
from ..geometry import Box, box_distance, overlaps
from .layout import SceneLayout
from .nav import connected_from, free_cells
from .robust import robust_pair

log = logging.getLogger(__name__)

GRID = 0.05
SHELL = 0.05  # container wall thickness


@dataclass(frozen=True)
class ObjectInstance:
    instance_id: str
    category: str
    box: Box
    pickupable: bool
    container: bool = False
    surface: bool = False

    @classmethod
    def of(cls, instance_id: str, cat: str, box: Box) -> "ObjectInstance":
        spec = category(cat)
        return cls(instance_id, cat, box, spec.pickupable, spec.container, spec.surface)


@dataclass(frozen=True)
class Scene:
    layout: SceneLayout
    objects: tuple[ObjectInstance, ...]
    seed: int = 0
    # (slot index, category, drawn count) before placement; kept for sampling audits
    draws: tuple = field(default=(), compare=False, repr=False)
    skipped: tuple = field(default=(), compare=False, repr=False)

    @property
    def scene_id(self) -> str:
        return f"{self.layout.layout_id}_s{self.seed}"

    @property
    def room(self) -> Box:
        return self.layout.room_extent

    @property
    def room_type(self) -> str:
        return self.layout.room_type

    @cached_property
    def primitives(self) -> "Primitives":
        return build_primitives(self)

    @cached_property
    def obstacles(self) -> tuple[Box, ...]:
        return tuple(o.box for o in self.objects if o.box.bottom < 2.0)

    def free_lattice(self, q: float, radius: float) -> np.ndarray:
        key = ("_free", q, radius)
        cache = self.__dict__.setdefault("_cache", {})
        if key not in cache:
            cache[key] = free_cells(self.room, self.obstacles, q, radius)
        return cache[key]

    def cache(self) -> dict:
        """Per-scene scratch space for derived data (visibility, travel costs)."""
        return self.__dict__.setdefault("_cache", {})

    def to_json(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "layout_id": self.layout.layout_id,
            "room_type": self.room_type,
            "room_extent": self.room.to_json(),
            "seed": self.seed,
            "layout": self.layout.to_json(),
            "objects": [{"id": o.instance_id, "category": o.category, "box": o.box.to_json(),
                         "pickupable": o.pickupable, "container": o.container,
                         "surface": o.surface} for o in self.objects],
        }

    @classmethod
    def from_json(cls, d: dict) -> "Scene":
        layout = SceneLayout.from_json(d["layout"])
        objs = tuple(ObjectInstance(o["id"], o["category"], Box.from_json(o["box"]),
                                    o["pickupable"], o["container"], o["surface"])
                     for o in d["objects"])
        return cls(layout, objs, int(d["seed"]))


@dataclass(frozen=True)
class Primitives:
    lo: np.ndarray  # (M, 3)
    hi: np.ndarray  # (M, 3)
    owner: np.ndarray  # (M,) index into scene.objects, -1 for walls/floor/ceiling
    category_code: np.ndarray  # (M,) -1 for structure


def container_shell(box: Box, t: float = SHELL) -> list[Box]:
    (x0, y0, z0), (x1, y1, z1) = box.lo, box.hi
    return [
        Box((x0, y0, z0), (x0 + t, y1, z1)),
        Box((x1 - t, y0, z0), (x1, y1, z1)),
        Box((x0 + t, y0, z0), (x1 - t, y0 + t, z1)),
        Box((x0 + t, y1 - t, z0), (x1 - t, y1, z1)),
    ]


def build_primitives(scene: Scene) -> Primitives:
    lo, hi, owner, code = [], [], [], []
    for idx, o in enumerate(scene.objects):
        parts = container_shell(o.box) if o.container else [o.box]
        for b in parts:
            lo.append(b.lo)
            hi.append(b.hi)
            owner.append(idx)
            code.append(CATEGORY_INDEX[o.category])
    (X0, Y0, Z0), (X1, Y1, Z1) = scene.room.lo, scene.room.hi
    t = 0.1
    structure = [
        ((X0 - t, Y0 - t, Z0 - t), (X1 + t, Y1 + t, Z0)),  # floor
        ((X0 - t, Y0 - t, Z1), (X1 + t, Y1 + t, Z1 + t)),  # ceiling
        ((X0 - t, Y0 - t, Z0), (X0, Y1 + t, Z1)),
        ((X1, Y0 - t, Z0), (X1 + t, Y1 + t, Z1)),
        ((X0, Y0 - t, Z0), (X1, Y0, Z1)),
        ((X0, Y1, Z0), (X1, Y1 + t, Z1)),
    ]
    for a, b in structure:
        lo.append(a)
        hi.append(b)
        owner.append(-1)
        code.append(-1)
    return Primitives(np.array(lo, dtype=float), np.array(hi, dtype=float),
                      np.array(owner, dtype=np.int32), np.array(code, dtype=np.int32))


def _scene_rng(layout_id: str, seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(layout_id.encode())]))


def _snap(v: float) -> float:
    return round(round(v / GRID) * GRID, 9)


def _grid_range(lo: float, hi: float) -> np.ndarray:
    """Multiples of GRID in [lo, hi]."""
    a = int(np.ceil(lo / GRID - 1e-9))
    b = int(np.floor(hi / GRID + 1e-9))
    return np.arange(a, b + 1)


def _candidate(slot_kind: str, furn, dims, rng: np.random.Generator) -> Box | None:
    w, d, h = dims
    if rng.random() < 0.5:
        w, d = d, w
    fb = furn.box
    if slot_kind == "on":
        xs = _grid_range(fb.lo[0], fb.hi[0] - w)
        ys = _grid_range(fb.lo[1], fb.hi[1] - d)
        z0 = fb.top
    elif slot_kind == "in":
        xs = _grid_range(fb.lo[0] + SHELL, fb.hi[0] - SHELL - w)
        ys = _grid_range(fb.lo[1] + SHELL, fb.hi[1] - SHELL - d)
        z0 = fb.bottom
    else:
        front = furn.front
        if front == (0, 0):
            front = [(0, 1), (0, -1), (1, 0), (-1, 0)][int(rng.integers(4))]
        gap = GRID * int(rng.integers(0, 3))
        if front[1] != 0:
            xs = _grid_range(fb.lo[0], fb.hi[0] - w)
            y0 = fb.hi[1] + gap if front[1] > 0 else fb.lo[1] - gap - d
            ys = np.array([int(round(y0 / GRID))])
        else:
            ys = _grid_range(fb.lo[1], fb.hi[1] - d)
            x0 = fb.hi[0] + gap if front[0] > 0 else fb.lo[0] - gap - w
            xs = np.array([int(round(x0 / GRID))])
        z0 = 0.0
    if len(xs) == 0 or len(ys) == 0:
        return None
    x0 = round(int(rng.choice(xs)) * GRID, 9)
    y0 = round(int(rng.choice(ys)) * GRID, 9)
    return Box((x0, y0, z0), (_snap(x0 + w), _snap(y0 + d), _snap(z0 + h)))


class _Placer:
    def __init__(self, layout: SceneLayout, cfg: SceneConfig, rel_cfg: RelationConfig):
        self.layout = layout
        self.cfg = cfg
        self.rel_cfg = rel_cfg
        self.objects: list[ObjectInstance] = [
            ObjectInstance.of(f.instance_id, f.category, f.box) for f in layout.fixed_furniture
        ]
        q = cfg.coverage_size
        self.spawn_cell = (int(layout.spawn[0] // q), int(layout.spawn[1] // q))

    def _blocks(self, extra: Box | None = None):
        boxes = [o.box for o in self.objects if o.box.bottom < 2.0]
        return boxes + ([extra] if extra is not None else [])

    def admissible(self, box: Box, cat: str, slot_kind: str, host_id: str) -> bool:
        room = self.layout.room_extent
        if not box.inside(room):
            return False
        for o in self.objects:
            if o.container and o.instance_id == host_id:
                if any(overlaps(box, s) for s in container_shell(o.box)):
                    return False
            elif overlaps(box, o.box):
                return False
            if o.category == cat and box_distance(box, o.box) <= self.cfg.same_category_gap + 1e-9:
                return False
            if self.cfg.robust_relations and not robust_pair(box, cat, o.box, o.category,
                                                             self.rel_cfg, GRID):
                return False
        if slot_kind == "near":
            q = self.cfg.coverage_size
            free = free_cells(room, self._blocks(box), q, self.cfg.agent_radius)
            if not free[self.spawn_cell]:
                return False
            # a floor object may only remove the cells it stands on
            reach = connected_from(free, self.spawn_cell)
            if reach.sum() != free.sum():
                return False
        return True

    def add(self, cat: str, box: Box, slot_kind: str) -> ObjectInstance:
        n = sum(1 for o in self.objects if o.category == cat)
        inst = ObjectInstance.of(f"{cat}_{n}", cat, box)
        self.objects.append(inst)
        return inst


def generate_scene(layout: SceneLayout, seed: int, cfg: SceneConfig | None = None,
                   rel_cfg: RelationConfig | None = None) -> Scene:
    """Sample pickupables into the layout's slots; deterministic in (layout, seed, cfg)."""
    cfg = cfg or SceneConfig()
    rel_cfg = rel_cfg or RelationConfig()
    layout.validate()
    rng = _scene_rng(layout.layout_id, seed)
    placer = _Placer(layout, cfg, rel_cfg)
    draws, skipped = [], []
    for si, slot in enumerate(layout.placement_slots):
        furn = layout.furniture(slot.furniture_id)
        used = 0
        for cat, p, cap in slot.categories:
            present = rng.random() < p
            count = int(rng.integers(1, cap + 1)) if present else 0
            draws.append((si, cat, count))
            for _ in range(count):
                if used >= slot.capacity:
                    skipped.append((si, cat, "capacity"))
                    continue
                dims = category(cat).sizes[int(rng.integers(len(category(cat).sizes)))]
                placed = False
                for _ in range(cfg.placement_retries):
                    box = _candidate(slot.kind, furn, dims, rng)
                    if box is not None and placer.admissible(box, cat, slot.kind, furn.instance_id):
                        placer.add(cat, box, slot.kind)
                        used += 1
                        placed = True
                        break
                if not placed:
                    skipped.append((si, cat, "infeasible"))
                    log.debug("slot %d of %s: could not place %s", si, layout.layout_id, cat)
    return Scene(layout, tuple(placer.objects), seed, tuple(draws), tuple(skipped))


def spawn_pose(scene: Scene):
    from .camera import Viewport
    return Viewport(scene.layout.spawn[0], scene.layout.spawn[1], 0.0, 0.0)


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene.to_json(), indent=1), encoding="utf-8")


def load_scene(path: str | Path) -> Scene:
    return Scene.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def save_scenes(scenes, directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for s in scenes:
        p = directory / f"{s.scene_id}.json"
        save_scene(s, p)
        paths.append(p)
    return paths


def load_scenes(directory: str | Path) -> dict[str, Scene]:
    out = {}
    for p in sorted(Path(directory).glob("*.json")):
        s = load_scene(p)
        out[s.scene_id] = s
    return out
