"""Connected-component clustering of labeled voxels into objects."""
from __future__ import annotations

import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..config import ReconConfig, RelationConfig
from ..geometry import Box
from .graph import SceneGraph, SceneObject
from .memory import StateMemory
from .relations import pairwise_relations


def components(coords: np.ndarray, link_units: float) -> list[np.ndarray]:
    """Index groups of points connected by links of length <= ``link_units``."""
    n = len(coords)
    if n == 0:
        return []
    pairs = cKDTree(coords).query_pairs(link_units + 1e-9, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.nonzero(np.diff(labels[order]))[0] + 1
    return np.split(order, splits)


def _cluster_category(state: StateMemory, cat: str, link_units: float) -> list[tuple]:
    coords = sorted(state.voxels_of(cat))
    arr = np.array(coords, dtype=np.int64).reshape(-1, 3)
    return [tuple(coords[i] for i in sorted(group)) for group in components(arr, link_units)]


def merge_overlapping(groups: list[tuple]) -> list[tuple]:
    """Merge voxel groups whose inclusive index bounding boxes intersect, to a fixed point."""
    groups = [tuple(g) for g in groups]
    while True:
        boxes = [(np.min(g, axis=0), np.max(g, axis=0)) for g in groups]
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                (alo, ahi), (blo, bhi) = boxes[i], boxes[j]
                if np.all(alo <= bhi) and np.all(blo <= ahi):
                    groups[i] = tuple(sorted(groups[i] + groups[j]))
                    del groups[j]
                    merged = True
                    break
            if merged:
                break
        if not merged:
            return groups


def _object(cat: str, members: tuple, state: StateMemory) -> SceneObject:
    arr = np.array(members)
    vs = state.voxel_size
    o = np.array(state.room.lo)
    lo = tuple(round(float(v), 9) for v in arr.min(axis=0) * vs + o)
    hi = tuple(round(float(v), 9) for v in (arr.max(axis=0) + 1) * vs + o)
    conf = sum(state.grid[c].category_scores[cat] / state.grid[c].observed_count for c in members)
    return SceneObject("", cat, Box(lo, hi), frozenset(members), conf / len(members))


def cluster_objects(state: StateMemory, link_distance: float, min_voxels: int = 4,
                    incremental: bool = True, merge: bool = False) -> list[SceneObject]:
    """Objects = connected components of same-label voxels within ``link_distance``.

    With ``incremental`` only categories whose voxel membership changed since
    the previous call are re-clustered.  With ``merge`` components of one
    label whose bounding boxes overlap become one object (fragments of a
    partly occluded object).
    """
    if link_distance <= 0:
        raise ValueError("link_distance must be positive")
    link_units = link_distance / state.voxel_size
    cache = state._components
    if not incremental or cache.get("_link") != (link_units,):
        cache.clear()
        cache["_link"] = (link_units,)
        cats = {v.category for v in state.grid.values()}
    else:
        cats = set(state.dirty)
    for cat in cats:
        cache[cat] = _cluster_category(state, cat, link_units)
    state.dirty.clear()
    objs = []
    for cat in sorted(k for k in cache if k != "_link"):
        groups = merge_overlapping(cache[cat]) if merge else cache[cat]
        for members in groups:
            if len(members) >= min_voxels:
                objs.append(_object(cat, members, state))
    objs.sort(key=lambda o: (o.category, min(o.member_voxels)))
    counter: dict[str, int] = {}
    out = []
    for o in objs:
        k = counter.get(o.category, 0)
        counter[o.category] = k + 1
        out.append(SceneObject(f"{o.category}#{k}", o.category, o.box, o.member_voxels,
                               o.mean_confidence))
    return out


def derive_relations(objects, cfg: RelationConfig | None = None) -> set:
    return pairwise_relations(((o.object_id, o.category, o.box) for o in objects),
                              cfg or RelationConfig())


def build_scene_graph(state: StateMemory, recon: ReconConfig | None = None,
                      relations: RelationConfig | None = None) -> SceneGraph:
    """Cluster then relate; cached on the state until the next fuse."""
    recon = recon or ReconConfig()
    relations = relations or RelationConfig()
    key = (state.version, recon, relations)
    if state._graph is not None and state._graph_key == key:
        return state._graph
    objs = cluster_objects(state, recon.link(state.voxel_size), recon.min_voxels, recon.incremental,
                           recon.merge_overlapping)
    graph = SceneGraph(tuple(objs), frozenset(derive_relations(objs, relations)))
    state._graph, state._graph_key = graph, key
    return graph
