"""Object-object spatial relation rules.

The same functions label ground-truth scene graphs and reconstructed ones, so
any disagreement between the two comes from reconstruction, never from the
rules themselves.
"""
from __future__ import annotations

from enum import Enum
from typing import Iterable

from ..catalog import is_container, is_surface
from ..config import RelationConfig
from ..geometry import TOL, Box, box_distance, overlaps, xy_distance, xy_overlaps


class Relation(str, Enum):
    CONTAIN = "Contain"
    IN = "In"
    HOLDING = "Holding"
    ON = "On"
    ABOVE = "Above"
    BELOW = "Below"
    NEAR = "Near"

    @property
    def word(self) -> str:
        return self.value.lower()

    @property
    def inverse(self) -> "Relation":
        return _INVERSE[self]


_INVERSE = {
    Relation.CONTAIN: Relation.IN, Relation.IN: Relation.CONTAIN,
    Relation.HOLDING: Relation.ON, Relation.ON: Relation.HOLDING,
    Relation.ABOVE: Relation.BELOW, Relation.BELOW: Relation.ABOVE,
    Relation.NEAR: Relation.NEAR,
}

RELATION_ORDER = tuple(Relation)


def relation(label: str) -> Relation:
    for r in Relation:
        if r.value.lower() == label.lower():
            return r
    raise ValueError(f"unknown spatial relation {label!r}")


def is_in(a: Box, b: Box, b_category: str) -> bool:
    return is_container(b_category) and overlaps(a, b)


def is_on(a: Box, b: Box, b_category: str, cfg: RelationConfig) -> bool:
    return (is_surface(b_category)
            and abs(a.bottom - b.top) <= cfg.on_epsilon + TOL
            and xy_overlaps(a, b))


def is_above(a: Box, b: Box, cfg: RelationConfig) -> bool:
    if a.bottom - b.top <= cfg.above_gap + TOL:
        return False
    return xy_overlaps(a, b) or xy_distance(a, b) <= cfg.above_xy_distance + TOL


def is_near(a: Box, b: Box, cfg: RelationConfig) -> bool:
    return box_distance(a, b) < cfg.near_distance - TOL


def directed_relations(a: Box, a_category: str, b: Box, b_category: str,
                       cfg: RelationConfig) -> set[Relation]:
    """Relations r with (A r B).  Inverses are produced by the reversed call."""
    out: set[Relation] = set()
    if is_in(a, b, b_category):
        out.add(Relation.IN)
    if is_in(b, a, a_category):
        out.add(Relation.CONTAIN)
    if is_on(a, b, b_category, cfg):
        out.add(Relation.ON)
    if is_on(b, a, a_category, cfg):
        out.add(Relation.HOLDING)
    if is_above(a, b, cfg):
        out.add(Relation.ABOVE)
    if is_above(b, a, cfg):
        out.add(Relation.BELOW)
    if is_near(a, b, cfg):
        out.add(Relation.NEAR)
    return out


def pairwise_relations(items: Iterable[tuple[str, str, Box]],
                       cfg: RelationConfig) -> set[tuple[str, Relation, str]]:
    """All (subject, relation, object) triples over ``(id, category, box)`` items."""
    items = list(items)
    out: set[tuple[str, Relation, str]] = set()
    for i, (ida, cata, boxa) in enumerate(items):
        for idb, catb, boxb in items[i + 1:]:
            for r in directed_relations(boxa, cata, boxb, catb, cfg):
                out.add((ida, r, idb))
                out.add((idb, r.inverse, ida))
    return out
