"""Which coverage cells still need observing.

A cell center bears a spatial relation to a detected object under rules that
mirror the object-object ones.  A cell is pruned when it bears at least one
relation to some detected anchor and none of the relations it bears appears,
for the anchor's category, among the planning triplets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..catalog import is_container, is_surface
from ..config import RelationConfig
from ..recon.relations import Relation
from ..scene.camera import GridSpec

# relations a point can bear; Contain and Holding need an extended subject
CELL_RELATIONS = (Relation.NEAR, Relation.ABOVE, Relation.BELOW, Relation.ON, Relation.IN)
BIT = {r: 1 << i for i, r in enumerate(CELL_RELATIONS)}

UNKNOWN_SPACE = 1
ANCHORED = 2


def _box_gaps(points: np.ndarray, lo, hi) -> np.ndarray:
    """Per-axis distance from each point to the box, 0 inside the slab."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return np.maximum(np.maximum(lo - points, points - hi), 0.0)


def point_relation_bits(points: np.ndarray, box, category: str,
                        cfg: RelationConfig | None = None) -> np.ndarray:
    """Bitmask (see ``BIT``) of relations each point bears to an object box."""
    cfg = cfg or RelationConfig()
    gaps = _box_gaps(points, box.lo, box.hi)
    d3 = np.sqrt((gaps ** 2).sum(axis=1))
    dxy = np.sqrt((gaps[:, :2] ** 2).sum(axis=1))
    z = points[:, 2]
    top, bottom = box.hi[2], box.lo[2]
    bits = np.zeros(len(points), dtype=np.int64)
    bits |= np.where(d3 < cfg.near_distance, BIT[Relation.NEAR], 0)
    band = dxy <= cfg.above_xy_distance
    bits |= np.where(band & (z > top + cfg.voxel_above_height), BIT[Relation.ABOVE], 0)
    bits |= np.where(band & (z < bottom), BIT[Relation.BELOW], 0)
    if is_surface(category):
        on = (dxy == 0.0) & (z > top) & (z <= top + cfg.support_height)
        bits |= np.where(on, BIT[Relation.ON], 0)
    if is_container(category):
        bits |= np.where(d3 == 0.0, BIT[Relation.IN], 0)
    return bits


def point_relations(point, box, category: str, cfg: RelationConfig | None = None) -> set[Relation]:
    bits = int(point_relation_bits(np.asarray([point], dtype=float), box, category, cfg)[0])
    return {r for r in CELL_RELATIONS if bits & BIT[r]}


def kept_relations(triplets) -> dict[str, int]:
    """Anchor category -> bitmask of relations some planning triplet keeps."""
    kept: dict[str, int] = {}
    for _, r, c2 in triplets:
        if r in BIT:
            kept[c2] = kept.get(c2, 0) | BIT[r]
    return kept


@dataclass
class RelevantRegion:
    """Flat masks over the coverage grid."""
    grid: GridSpec
    voxels: np.ndarray  # bool, still to observe
    provenance: np.ndarray  # int8: 0 not relevant, UNKNOWN_SPACE or ANCHORED
    pruned: np.ndarray = field(default=None)  # bool, removed by anchored relations

    @property
    def size(self) -> int:
        return int(self.voxels.sum())

    def coords(self) -> set[tuple[int, int, int]]:
        return {self.grid.unflat(int(i)) for i in np.nonzero(self.voxels)[0]}


def prune_mask(grid: GridSpec, objects, triplets, cfg: RelationConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(pruned, anchored) flat masks for detected ``objects`` and planning ``triplets``."""
    centers = grid.centers()
    kept = kept_relations(triplets)
    related = np.zeros(len(centers), dtype=bool)
    anchored = np.zeros(len(centers), dtype=bool)
    for o in objects:
        bits = point_relation_bits(centers, o.box, o.category, cfg)
        related |= bits != 0
        anchored |= (bits & kept.get(o.category, 0)) != 0
    return related & ~anchored, anchored


def relevant_regions(observed: np.ndarray, grid: GridSpec, objects=(), triplets=(),
                     cfg: RelationConfig | None = None, full_scan: bool = False) -> RelevantRegion:
    """Unobserved cells minus those ruled out by detected anchors.

    ``objects`` are the detected scene objects (anything with ``category`` and
    ``box``); with ``full_scan`` nothing is pruned.
    """
    unobserved = ~np.asarray(observed, dtype=bool)
    if full_scan or not len(objects):
        pruned = np.zeros_like(unobserved)
        anchored = np.zeros_like(unobserved)
    else:
        pruned, anchored = prune_mask(grid, objects, triplets, cfg)
    voxels = unobserved & ~pruned
    prov = np.where(voxels, np.where(anchored, ANCHORED, UNKNOWN_SPACE), 0).astype(np.int8)
    return RelevantRegion(grid, voxels, prov, pruned & unobserved)
