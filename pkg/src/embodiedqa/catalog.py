"""Closed object-category vocabulary.

One row per category: physical size, surface/container flags, the room types
it appears in, and the noun phrases used when questions and answers are
rendered.  Sizes are in meters and snap to the 5 cm voxel grid (pickupables)
or the 25 cm coverage grid (furniture).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

ROOM_TYPES = ("Bedroom", "LivingRoom", "Kitchen", "Bathroom")


@dataclass(frozen=True)
class Category:
    name: str
    pickupable: bool
    surface: bool = False
    container: bool = False
    # pickupables: candidate (x, y, z) extents; furniture: (w, d) footprints
    sizes: tuple = ()
    height: float = 0.0
    # furniture mounted on the wall above the floor (shelves)
    elevation: float = 0.0
    rooms: tuple[str, ...] = ()
    singular: str = ""
    plural: str = ""
    article: str = "a"
    entity: str = ""

    @property
    def furniture(self) -> bool:
        return not self.pickupable


def _words(name: str) -> str:
    name = re.sub(r"([a-z0-9])([A-Z])", r"\1 \2", name)
    return re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1 \2", name).lower()


def _pick(name, sizes, rooms, singular=None, plural=None, article=None, entity=None):
    sg = singular or _words(name)
    pl = plural or sg + "s"
    art = article or ("an" if sg[0] in "aeiou" else "a")
    return Category(name, True, sizes=tuple(sizes), rooms=tuple(rooms),
                    singular=sg, plural=pl, article=art, entity=entity or _words(name))


def _furn(name, sizes, height, rooms, surface=False, container=False, elevation=0.0,
          singular=None, plural=None, article=None, entity=None):
    sg = singular or _words(name)
    pl = plural or sg + "s"
    art = article or ("an" if sg[0] in "aeiou" else "a")
    return Category(name, False, surface=surface, container=container, sizes=tuple(sizes),
                    height=height, elevation=elevation, rooms=tuple(rooms),
                    singular=sg, plural=pl, article=art, entity=entity or _words(name))


B, L, K, T = "Bedroom", "LivingRoom", "Kitchen", "Bathroom"

_ROWS = [
    # furniture
    _furn("Bed", [(2.0, 1.5), (2.0, 1.25)], 0.5, [B], surface=True),
    _furn("Nightstand", [(0.5, 0.5)], 0.5, [B], surface=True),
    _furn("Desk", [(1.25, 0.75), (1.0, 0.5)], 0.75, [B, L], surface=True),
    _furn("Dresser", [(1.0, 0.5)], 1.0, [B], surface=True),
    _furn("Shelf", [(1.0, 0.25), (0.75, 0.25)], 0.25, [B, L, K, T], surface=True,
          elevation=1.0, plural="shelves"),
    _furn("Sofa", [(2.0, 0.75), (1.5, 0.75)], 0.5, [L], surface=True),
    _furn("ArmChair", [(0.75, 0.75)], 0.5, [B, L], surface=True, singular="armchair",
          entity="armchair"),
    _furn("CoffeeTable", [(1.0, 0.5), (0.75, 0.5)], 0.5, [L], surface=True),
    _furn("TVStand", [(1.5, 0.5), (1.25, 0.5)], 0.5, [L], surface=True, singular="tv stand"),
    _furn("SideTable", [(0.5, 0.5)], 0.75, [L, B], surface=True),
    _furn("DiningTable", [(1.5, 1.0), (1.25, 0.75)], 0.75, [K], surface=True),
    _furn("CounterTop", [(2.0, 0.75), (1.5, 0.75), (1.0, 0.5)], 1.0, [K, T], surface=True,
          singular="countertop", entity="countertop"),
    _furn("Cabinet", [(1.0, 0.5), (0.75, 0.5)], 1.0, [K, T], surface=True),
    _furn("Toilet", [(0.5, 0.75)], 0.5, [T], surface=True),
    _furn("Fridge", [(0.75, 0.75)], 2.0, [K]),
    _furn("Bathtub", [(1.75, 0.75), (1.5, 0.75)], 0.5, [T], container=True),
    _furn("GarbageCan", [(0.5, 0.5)], 0.5, [B, L, K, T], container=True),
    _furn("LaundryBasket", [(0.5, 0.5)], 0.5, [B, T], container=True),
    _furn("Box", [(0.5, 0.5)], 0.5, [L, B], container=True, plural="boxes"),
    # pickupables
    _pick("Pillow", [(0.25, 0.25, 0.1)], [B, L]),
    _pick("TeddyBear", [(0.2, 0.15, 0.25)], [B]),
    _pick("Book", [(0.2, 0.15, 0.1)], [B, L]),
    _pick("Pen", [(0.15, 0.1, 0.1)], [B, L]),
    _pick("Pencil", [(0.15, 0.1, 0.1)], [B]),
    _pick("CellPhone", [(0.15, 0.1, 0.1)], [B, L]),
    _pick("Laptop", [(0.25, 0.2, 0.1)], [B, L]),
    _pick("AlarmClock", [(0.15, 0.1, 0.15)], [B]),
    _pick("Basketball", [(0.25, 0.25, 0.25)], [B]),
    _pick("TennisRacket", [(0.25, 0.2, 0.1)], [B]),
    _pick("RemoteControl", [(0.15, 0.1, 0.1)], [L]),
    _pick("Newspaper", [(0.25, 0.2, 0.1)], [L]),
    _pick("Vase", [(0.15, 0.15, 0.25)], [L]),
    _pick("Statue", [(0.15, 0.15, 0.25)], [L]),
    _pick("KeyChain", [(0.1, 0.1, 0.1)], [L, B], singular="key chain"),
    _pick("Candle", [(0.1, 0.1, 0.15)], [L, T]),
    _pick("Apple", [(0.1, 0.1, 0.1)], [K]),
    _pick("Bread", [(0.25, 0.15, 0.15)], [K], singular="loaf of bread",
          plural="loaves of bread"),
    _pick("Tomato", [(0.1, 0.1, 0.1)], [K], plural="tomatoes"),
    _pick("Potato", [(0.1, 0.1, 0.1)], [K], plural="potatoes"),
    _pick("Lettuce", [(0.2, 0.2, 0.15)], [K], singular="head of lettuce",
          plural="heads of lettuce"),
    _pick("Egg", [(0.1, 0.1, 0.1)], [K]),
    _pick("Knife", [(0.25, 0.1, 0.1)], [K], plural="knives"),
    _pick("Fork", [(0.2, 0.1, 0.1)], [K]),
    _pick("Spoon", [(0.2, 0.1, 0.1)], [K]),
    _pick("Mug", [(0.15, 0.1, 0.15)], [K, B]),
    _pick("Bowl", [(0.2, 0.2, 0.1)], [K]),
    _pick("Plate", [(0.25, 0.25, 0.1)], [K]),
    _pick("Pan", [(0.25, 0.25, 0.1)], [K]),
    _pick("SaltShaker", [(0.1, 0.1, 0.15)], [K]),
    _pick("PepperShaker", [(0.1, 0.1, 0.15)], [K]),
    _pick("Kettle", [(0.2, 0.15, 0.25)], [K]),
    _pick("SoapBar", [(0.1, 0.1, 0.1)], [T], singular="bar of soap", plural="bars of soap"),
    _pick("SoapBottle", [(0.1, 0.1, 0.2)], [T, K]),
    _pick("ToiletPaper", [(0.15, 0.15, 0.15)], [T], singular="roll of toilet paper",
          plural="rolls of toilet paper"),
    _pick("SprayBottle", [(0.1, 0.1, 0.25)], [T]),
    _pick("TissueBox", [(0.25, 0.15, 0.1)], [T], singular="tissue box",
          plural="tissue boxes"),
    _pick("Towel", [(0.25, 0.2, 0.1)], [T]),
    _pick("Plunger", [(0.15, 0.15, 0.25)], [T]),
    _pick("ScrubBrush", [(0.2, 0.1, 0.1)], [T], plural="scrub brushes"),
]

CATEGORIES: dict[str, Category] = {c.name: c for c in _ROWS}
# integer codes used in observation label grids
CATEGORY_NAMES: tuple[str, ...] = tuple(c.name for c in _ROWS)
CATEGORY_INDEX: dict[str, int] = {n: i for i, n in enumerate(CATEGORY_NAMES)}
FURNITURE = tuple(c.name for c in _ROWS if c.furniture)
PICKUPABLES = tuple(c.name for c in _ROWS if c.pickupable)
SURFACES = frozenset(c.name for c in _ROWS if c.surface)
CONTAINERS = frozenset(c.name for c in _ROWS if c.container)


def category(name: str) -> Category:
    try:
        return CATEGORIES[name]
    except KeyError:
        raise KeyError(f"unknown category {name!r}") from None


def is_surface(name: str) -> bool:
    return name in SURFACES


def is_container(name: str) -> bool:
    return name in CONTAINERS


def pickupables_for(room_type: str) -> tuple[str, ...]:
    return tuple(c for c in PICKUPABLES if room_type in CATEGORIES[c].rooms)


def furniture_for(room_type: str) -> tuple[str, ...]:
    return tuple(c for c in FURNITURE if room_type in CATEGORIES[c].rooms)


def vocabulary_for(room_type: str) -> tuple[str, ...]:
    return furniture_for(room_type) + pickupables_for(room_type)


def entity_name(name: str) -> str:
    """Knowledge-base entity id of a category, e.g. ``TeddyBear`` -> ``teddy bear``."""
    return category(name).entity


def noun(name: str, count: int = 1) -> str:
    c = category(name)
    return c.singular if count == 1 else c.plural


def with_article(name: str) -> str:
    c = category(name)
    return f"{c.article} {c.singular}"


def category_phrases() -> dict[str, str]:
    """Every surface form that names a category, mapped to the category."""
    table: dict[str, str] = {}
    for c in _ROWS:
        for phrase in (c.singular, c.plural, c.entity):
            table[phrase] = c.name
    return table
