"""Room layouts: fixed furniture plus the slots pickupables are sampled into."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..catalog import ROOM_TYPES, category
from ..config import RelationConfig, SceneConfig
from ..geometry import Box, overlaps
from .nav import free_cells, connected_from, nearest_free
from .robust import robust_pair

log = logging.getLogger(__name__)

ROOM_HEIGHT = 2.5
DEFAULT_PRESENCE = 0.3
DEFAULT_CAP = 2

# (room type, pickupable) -> [(slot kind, furniture category), ...]
_B = {
    "Pillow": [("on", "Bed"), ("on", "ArmChair"), ("in", "LaundryBasket")],
    "TeddyBear": [("on", "Bed"), ("on", "ArmChair"), ("near", "Bed"), ("in", "Box")],
    "Book": [("on", "Desk"), ("on", "Nightstand"), ("on", "Shelf"), ("on", "Dresser"),
             ("on", "SideTable"), ("in", "Box")],
    "Pen": [("on", "Desk"), ("on", "Nightstand"), ("in", "GarbageCan")],
    "Pencil": [("on", "Desk"), ("on", "Nightstand"), ("in", "GarbageCan")],
    "CellPhone": [("on", "Bed"), ("on", "Nightstand"), ("on", "Desk")],
    "Laptop": [("on", "Desk"), ("on", "Bed")],
    "AlarmClock": [("on", "Nightstand"), ("on", "Dresser"), ("on", "Shelf")],
    "Basketball": [("near", "Bed"), ("in", "Box")],
    "TennisRacket": [("near", "Bed"), ("near", "Desk"), ("in", "Box")],
    "KeyChain": [("on", "Dresser"), ("on", "Nightstand"), ("on", "Desk")],
    "Mug": [("on", "Desk"), ("on", "Nightstand"), ("on", "SideTable")],
}
_L = {
    "Pillow": [("on", "Sofa"), ("on", "ArmChair")],
    "Book": [("on", "CoffeeTable"), ("on", "Shelf"), ("on", "SideTable"), ("on", "Desk"),
             ("on", "TVStand"), ("in", "Box")],
    "Pen": [("on", "CoffeeTable"), ("on", "Desk")],
    "CellPhone": [("on", "Sofa"), ("on", "CoffeeTable"), ("on", "SideTable")],
    "Laptop": [("on", "Desk"), ("on", "CoffeeTable"), ("on", "Sofa")],
    "RemoteControl": [("on", "Sofa"), ("on", "CoffeeTable"), ("on", "TVStand"), ("on", "ArmChair")],
    "Newspaper": [("on", "CoffeeTable"), ("on", "SideTable"), ("on", "Sofa"), ("in", "GarbageCan"),
                  ("in", "Box")],
    "Vase": [("on", "SideTable"), ("on", "Shelf"), ("on", "TVStand"), ("on", "CoffeeTable")],
    "Statue": [("on", "Shelf"), ("on", "TVStand"), ("on", "SideTable")],
    "KeyChain": [("on", "SideTable"), ("on", "CoffeeTable"), ("on", "Desk"), ("in", "Box")],
    "Candle": [("on", "Shelf"), ("on", "CoffeeTable"), ("on", "SideTable"), ("on", "TVStand")],
}
_K = {
    "Apple": [("on", "CounterTop"), ("on", "DiningTable"), ("in", "GarbageCan")],
    "Tomato": [("on", "CounterTop"), ("on", "DiningTable"), ("in", "GarbageCan")],
    "Potato": [("on", "CounterTop"), ("on", "DiningTable"), ("in", "GarbageCan")],
    "Egg": [("on", "CounterTop"), ("on", "DiningTable")],
    "Bread": [("on", "CounterTop"), ("on", "DiningTable")],
    "Lettuce": [("on", "CounterTop"), ("on", "DiningTable")],
    "Knife": [("on", "CounterTop"), ("on", "DiningTable")],
    "Fork": [("on", "CounterTop"), ("on", "DiningTable")],
    "Spoon": [("on", "CounterTop"), ("on", "DiningTable")],
    "Mug": [("on", "CounterTop"), ("on", "DiningTable"), ("on", "Shelf"), ("on", "Cabinet")],
    "Bowl": [("on", "CounterTop"), ("on", "DiningTable"), ("on", "Cabinet"), ("on", "Shelf")],
    "Plate": [("on", "CounterTop"), ("on", "DiningTable"), ("on", "Cabinet")],
    "Pan": [("on", "CounterTop"), ("on", "Cabinet")],
    "Kettle": [("on", "CounterTop"), ("on", "Cabinet")],
    "SaltShaker": [("on", "CounterTop"), ("on", "DiningTable"), ("on", "Shelf")],
    "PepperShaker": [("on", "CounterTop"), ("on", "DiningTable"), ("on", "Shelf")],
    "SoapBottle": [("on", "CounterTop")],
}
_T = {
    "SoapBar": [("on", "CounterTop"), ("on", "Cabinet"), ("in", "Bathtub")],
    "SoapBottle": [("on", "CounterTop"), ("on", "Shelf"), ("in", "Bathtub")],
    "ToiletPaper": [("on", "Toilet"), ("on", "Shelf"), ("on", "CounterTop"), ("on", "Cabinet"),
                    ("in", "GarbageCan")],
    "SprayBottle": [("on", "CounterTop"), ("on", "Cabinet"), ("near", "Toilet")],
    "TissueBox": [("on", "Toilet"), ("on", "CounterTop"), ("on", "Shelf"), ("in", "GarbageCan")],
    "Towel": [("on", "CounterTop"), ("on", "Cabinet"), ("in", "LaundryBasket"), ("in", "Bathtub")],
    "Plunger": [("near", "Toilet")],
    "ScrubBrush": [("near", "Toilet"), ("in", "Bathtub")],
    "Candle": [("on", "Shelf"), ("on", "CounterTop"), ("on", "Toilet")],
}
PLACEMENT = {"Bedroom": _B, "LivingRoom": _L, "Kitchen": _K, "Bathroom": _T}

# (required furniture, optional furniture, how many optional, room side range)
ROOM_PLAN = {
    "Bedroom": (("Bed",), ("Nightstand", "Desk", "Dresser", "Shelf", "ArmChair", "GarbageCan",
                           "LaundryBasket", "Box", "SideTable"), (3, 5), (3.5, 4.5)),
    "LivingRoom": (("Sofa", "CoffeeTable"), ("TVStand", "ArmChair", "SideTable", "Shelf", "Desk",
                                            "Box", "GarbageCan"), (3, 4), (4.0, 5.0)),
    "Kitchen": (("CounterTop", "DiningTable"), ("Fridge", "Shelf", "Cabinet", "GarbageCan"),
                (2, 4), (3.5, 4.5)),
    "Bathroom": (("Toilet", "CounterTop"), ("Bathtub", "Shelf", "Cabinet", "GarbageCan",
                                           "LaundryBasket"), (2, 3), (3.0, 3.75)),
}
FREE_STANDING = {"CoffeeTable", "DiningTable"}
FURNITURE_GAP = 0.5


@dataclass(frozen=True)
class Furniture:
    instance_id: str
    category: str
    box: Box
    # unit vector (x, y) pointing from the furniture into the room
    front: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class Slot:
    furniture_id: str
    kind: str  # "on" | "in" | "near"
    categories: tuple[tuple[str, float, int], ...]  # (category, presence probability, count cap)
    capacity: int


@dataclass(frozen=True)
class SceneLayout:
    layout_id: str
    room_type: str
    room_extent: Box
    fixed_furniture: tuple[Furniture, ...]
    placement_slots: tuple[Slot, ...] = ()
    spawn: tuple[float, float] = (0.0, 0.0)

    def furniture(self, instance_id: str) -> Furniture:
        for f in self.fixed_furniture:
            if f.instance_id == instance_id:
                return f
        raise KeyError(instance_id)

    def validate(self) -> None:
        ids = {f.instance_id for f in self.fixed_furniture}
        for f in self.fixed_furniture:
            if not f.box.inside(self.room_extent):
                raise ValueError(f"{f.instance_id} outside the room")
        for s in self.placement_slots:
            if s.furniture_id not in ids:
                raise ValueError(f"slot references missing furniture {s.furniture_id}")

    def to_json(self) -> dict:
        return {
            "layout_id": self.layout_id,
            "room_type": self.room_type,
            "room_extent": self.room_extent.to_json(),
            "spawn": list(self.spawn),
            "furniture": [{"id": f.instance_id, "category": f.category, "box": f.box.to_json(),
                           "front": list(f.front)} for f in self.fixed_furniture],
            "slots": [{"furniture": s.furniture_id, "kind": s.kind, "capacity": s.capacity,
                       "categories": [list(c) for c in s.categories]} for s in self.placement_slots],
        }

    @classmethod
    def from_json(cls, d: dict) -> "SceneLayout":
        furn = tuple(Furniture(f["id"], f["category"], Box.from_json(f["box"]), tuple(f["front"]))
                     for f in d["furniture"])
        slots = tuple(Slot(s["furniture"], s["kind"],
                           tuple((c, float(p), int(cap)) for c, p, cap in s["categories"]),
                           int(s["capacity"])) for s in d.get("slots", ()))
        return cls(d["layout_id"], d["room_type"], Box.from_json(d["room_extent"]), furn, slots,
                   tuple(d.get("spawn", (0.0, 0.0))))


def save_layouts(layouts, path: str | Path) -> None:
    Path(path).write_text(json.dumps([l.to_json() for l in layouts], indent=1), encoding="utf-8")


def load_layouts(path: str | Path) -> list[SceneLayout]:
    return [SceneLayout.from_json(d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]


def _slots_for(room_type: str, furniture: list[Furniture]) -> tuple[Slot, ...]:
    rules = PLACEMENT[room_type]
    slots = []
    for f in furniture:
        for kind in ("on", "in", "near"):
            cats = tuple((c, DEFAULT_PRESENCE, DEFAULT_CAP) for c, places in sorted(rules.items())
                         if (kind, f.category) in places)
            if not cats:
                continue
            ex = f.box.extent
            area = ex[0] * ex[1] if kind != "near" else max(ex[0], ex[1]) * 0.25
            slots.append(Slot(f.instance_id, kind, cats, max(2, min(8, int(area / 0.08)))))
    return tuple(slots)


def _wall_box(cat: str, w: float, d: float, wall: int, offset: float, W: float, D: float):
    """Footprint flush with ``wall`` (0:-y 1:+x 2:+y 3:-x) at ``offset`` along it."""
    spec = category(cat)
    z0, z1 = spec.elevation, spec.elevation + spec.height
    if wall == 0:
        return Box((offset, 0.0, z0), (offset + w, d, z1)), (0, 1)
    if wall == 2:
        return Box((offset, D - d, z0), (offset + w, D, z1)), (0, -1)
    if wall == 1:
        return Box((W - d, offset, z0), (W, offset + w, z1)), (-1, 0)
    return Box((0.0, offset, z0), (d, offset + w, z1)), (1, 0)


def _footprint_gap(a: Box, b: Box) -> float:
    gx = max(0.0, b.lo[0] - a.hi[0], a.lo[0] - b.hi[0])
    gy = max(0.0, b.lo[1] - a.hi[1], a.lo[1] - b.hi[1])
    return max(gx, gy)


def _fits(box: Box, cat: str, placed: list[Furniture], rel_cfg: RelationConfig) -> bool:
    for f in placed:
        if overlaps(box, f.box):
            return False
        floating = category(cat).elevation > 0 or category(f.category).elevation > 0
        if not floating and _footprint_gap(box, f.box) < FURNITURE_GAP - 1e-9:
            return False
        if not robust_pair(box, cat, f.box, f.category, rel_cfg, 0.05):
            return False
    return True


def generate_layout(layout_id: str, room_type: str, rng: np.random.Generator,
                    cfg: SceneConfig | None = None, rel_cfg: RelationConfig | None = None,
                    max_tries: int = 200) -> SceneLayout:
    cfg = cfg or SceneConfig()
    rel_cfg = rel_cfg or RelationConfig()
    required, optional, (kmin, kmax), (smin, smax) = ROOM_PLAN[room_type]
    q = cfg.coverage_size
    sides = np.arange(smin, smax + 1e-9, q)
    for _ in range(max_tries):
        W = float(rng.choice(sides))
        D = float(rng.choice(sides))
        k = int(rng.integers(kmin, kmax + 1))
        extra = list(rng.choice(optional, size=min(k, len(optional)), replace=False))
        wanted = list(required) + [str(c) for c in extra]
        placed: list[Furniture] = []
        ok = True
        for idx, cat in enumerate(wanted):
            spec = category(cat)
            box = None
            for _ in range(60):
                w, d = spec.sizes[int(rng.integers(len(spec.sizes)))]
                if cat in FREE_STANDING:
                    if rng.random() < 0.5:
                        w, d = d, w
                    xs = np.arange(FURNITURE_GAP, W - w - FURNITURE_GAP + 1e-9, q)
                    ys = np.arange(FURNITURE_GAP, D - d - FURNITURE_GAP + 1e-9, q)
                    if len(xs) == 0 or len(ys) == 0:
                        continue
                    x0, y0 = float(rng.choice(xs)), float(rng.choice(ys))
                    cand = Box((x0, y0, 0.0), (x0 + w, y0 + d, spec.height))
                    front = (0, 0)
                else:
                    wall = int(rng.integers(4))
                    span = W if wall in (0, 2) else D
                    offs = np.arange(0.0, span - w + 1e-9, q)
                    if len(offs) == 0:
                        continue
                    cand, front = _wall_box(cat, w, d, wall, float(rng.choice(offs)), W, D)
                if _fits(cand, cat, placed, rel_cfg):
                    box = cand
                    break
            if box is None:
                if cat in required:
                    ok = False
                    break
                continue
            n = sum(1 for f in placed if f.category == cat)
            placed.append(Furniture(f"{cat}_{n}", cat, box, front))
        if not ok:
            continue
        room = Box((0.0, 0.0, 0.0), (W, D, ROOM_HEIGHT))
        blocks = [f.box for f in placed]
        free = free_cells(room, blocks, q, cfg.agent_radius)
        if free.sum() == 0:
            continue
        spawn_cell = nearest_free(free, (W / 2, D / 2), q)
        reach = connected_from(free, spawn_cell)
        if reach.sum() != free.sum():
            continue
        spawn = ((spawn_cell[0] + 0.5) * q, (spawn_cell[1] + 0.5) * q)
        layout = SceneLayout(layout_id, room_type, room, tuple(placed),
                             _slots_for(room_type, placed), spawn)
        layout.validate()
        return layout
    raise RuntimeError(f"could not lay out a {room_type} after {max_tries} tries")


def generate_layouts(seed: int = 0, per_type: int = 8, cfg: SceneConfig | None = None) -> list[SceneLayout]:
    rng = np.random.default_rng(seed)
    out = []
    for room_type in ROOM_TYPES:
        for i in range(per_type):
            out.append(generate_layout(f"{room_type}_{i:02d}", room_type, rng, cfg))
    return out
