from __future__ import annotations

import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from embodiedqa.catalog import CONTAINERS, SURFACES
from embodiedqa.config import ReconConfig, RelationConfig, SceneConfig
from embodiedqa.geometry import Box
from embodiedqa.recon.cluster import (build_scene_graph, cluster_objects, components, derive_relations,
                                      merge_overlapping)
from embodiedqa.recon.graph import SceneGraph, SceneObject, dump_graph, load_graph, match_graphs
from embodiedqa.recon.memory import StateMemory, backproject, fuse
from embodiedqa.recon.relations import Relation, directed_relations, pairwise_relations
from embodiedqa.scene.camera import Viewport, render_observation
from embodiedqa.scene.truth import ground_truth_scene_graph
from embodiedqa.scene.world import spawn_pose

REL = RelationConfig()
PLAIN = "Apple"
CATS = [PLAIN, "Pillow", sorted(CONTAINERS)[0], sorted(SURFACES)[0], sorted(CONTAINERS & SURFACES or SURFACES)[-1]]


def oracle_relations(a: Box, ca: str, b: Box, cb: str, units: float | None = None) -> set[Relation]:
    """Rule oracle written from center/half-extent form.

    With ``units`` the boxes are integer multiples of ``units`` and every test is
    done in exact integer arithmetic.
    """
    q = (lambda v: round(v / units)) if units else (lambda v: v)
    alo, ahi = [q(v) for v in a.lo], [q(v) for v in a.hi]
    blo, bhi = [q(v) for v in b.lo], [q(v) for v in b.hi]
    s = (lambda m: round(m / units)) if units else (lambda m: m)
    gaps = [max(0, max(alo[i], blo[i]) - min(ahi[i], bhi[i])) for i in range(3)]
    inter = [min(ahi[i], bhi[i]) - max(alo[i], blo[i]) for i in range(3)]
    overlap3 = all(v > 0 for v in inter)
    overlap2 = all(v > 0 for v in inter[:2])
    out = set()
    if overlap3 and cb in CONTAINERS:
        out.add(Relation.IN)
    if overlap3 and ca in CONTAINERS:
        out.add(Relation.CONTAIN)
    if overlap2 and cb in SURFACES and abs(alo[2] - bhi[2]) <= s(REL.on_epsilon):
        out.add(Relation.ON)
    if overlap2 and ca in SURFACES and abs(blo[2] - ahi[2]) <= s(REL.on_epsilon):
        out.add(Relation.HOLDING)
    xy2 = gaps[0] ** 2 + gaps[1] ** 2
    band = xy2 <= s(REL.above_xy_distance) ** 2 or overlap2
    if band and alo[2] - bhi[2] > s(REL.above_gap):
        out.add(Relation.ABOVE)
    if band and blo[2] - ahi[2] > s(REL.above_gap):
        out.add(Relation.BELOW)
    if sum(g * g for g in gaps) < s(REL.near_distance) ** 2:
        out.add(Relation.NEAR)
    return out


def random_box(rng: random.Random, lattice: bool) -> Box:
    if lattice:
        lo = [rng.randint(0, 20) for _ in range(3)]
        ext = [rng.randint(1, 8) for _ in range(3)]
        return Box(tuple(round(v * 0.05, 9) for v in lo), tuple(round((v + e) * 0.05, 9) for v, e in zip(lo, ext)))
    lo = [rng.uniform(0, 1) for _ in range(3)]
    return Box(tuple(lo), tuple(v + rng.uniform(0.02, 0.4) for v in lo))


def test_relations_match_rule_oracle_on_10k_pairs():
    rng = random.Random(0)
    for k in range(10_000):
        lattice = k % 2 == 0
        a, b = random_box(rng, lattice), random_box(rng, lattice)
        ca, cb = rng.choice(CATS), rng.choice(CATS)
        got = directed_relations(a, ca, b, cb, REL)
        assert got == oracle_relations(a, ca, b, cb, 0.05 if lattice else None), (a, ca, b, cb)


def test_gap_of_twenty_centimetres_is_near_both_ways():
    a = Box((0, 0, 0), (0.5, 0.5, 0.5))
    b = Box((0.7, 0, 0), (1.0, 0.5, 0.5))
    rel = pairwise_relations([("a", PLAIN, a), ("b", PLAIN, b)], REL)
    assert ("a", Relation.NEAR, "b") in rel and ("b", Relation.NEAR, "a") in rel


def test_stacked_boxes_are_above_and_below():
    b = Box((0, 0, 0), (0.5, 0.5, 0.5))
    a = Box((0.1, 0.1, 1.0), (0.4, 0.4, 1.2))
    rel = pairwise_relations([("a", PLAIN, a), ("b", PLAIN, b)], REL)
    assert ("a", Relation.ABOVE, "b") in rel and ("b", Relation.BELOW, "a") in rel


def test_coincident_boxes_are_not_above():
    b = Box((0, 0, 0), (0.5, 0.5, 0.5))
    assert not {Relation.ABOVE, Relation.BELOW} & directed_relations(b, PLAIN, b, PLAIN, REL)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 8))
def test_relation_sets_are_closed_under_inversion(seed, n):
    rng = random.Random(seed)
    items = [(f"o{i}", rng.choice(CATS), random_box(rng, seed % 2 == 0)) for i in range(n)]
    rel = pairwise_relations(items, REL)
    for s, r, o in rel:
        assert (o, r.inverse, s) in rel
        assert s != o


def union_find_components(coords: np.ndarray, link: float) -> set[frozenset[int]]:
    parent = list(range(len(coords)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(len(coords)), 2):
        if float(np.sum((coords[i] - coords[j]) ** 2)) <= link * link + 1e-9:
            parent[find(i)] = find(j)
    groups: dict[int, set[int]] = {}
    for i in range(len(coords)):
        groups.setdefault(find(i), set()).add(i)
    return {frozenset(g) for g in groups.values()}


def test_components_match_union_find_on_100_clouds():
    rng = np.random.default_rng(0)
    for k in range(100):
        n = 500 if k < 5 else int(rng.integers(1, 120))
        span = int(rng.integers(4, 30))
        coords = np.unique(rng.integers(0, span, size=(n, 3)), axis=0)
        link = float(rng.choice([1.0, math.sqrt(2), math.sqrt(3), 2 * math.sqrt(3)]))
        got = {frozenset(int(i) for i in g) for g in components(coords, link)}
        assert got == union_find_components(coords, link)


def _state(labels: dict[tuple[int, int, int], str], order=None) -> StateMemory:
    st_ = StateMemory(Box((0, 0, 0), (5, 5, 3)))
    items = [(c, cat, 1.0) for c, cat in labels.items()]
    if order is not None:
        items = [items[i] for i in order]
    return fuse(st_, items)


def test_adjacent_voxels_form_one_object():
    objs = cluster_objects(_state({(0, 0, 0): PLAIN, (1, 0, 0): PLAIN}), 0.05, min_voxels=1)
    assert len(objs) == 1
    assert objs[0].box == Box((0, 0, 0), (0.1, 0.05, 0.05))


def test_distant_voxels_form_two_objects():
    objs = cluster_objects(_state({(0, 0, 0): PLAIN, (9, 0, 0): PLAIN}), 0.1, min_voxels=1)
    assert len(objs) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_clustering_matches_per_category_union_find_and_is_order_invariant(seed):
    rng = np.random.default_rng(seed)
    coords = {tuple(int(v) for v in c) for c in rng.integers(0, 12, size=(80, 3))}
    labels = {c: ("Apple", "Bread")[int(rng.integers(2))] for c in sorted(coords)}
    link = 0.1
    objs = cluster_objects(_state(labels), link, min_voxels=2)
    shuffled = cluster_objects(_state(labels, rng.permutation(len(labels))), link, min_voxels=2)
    assert [(o.category, o.member_voxels, o.box) for o in objs] == \
           [(o.category, o.member_voxels, o.box) for o in shuffled]
    expected = set()
    for cat in ("Apple", "Bread"):
        pts = sorted(c for c, k in labels.items() if k == cat)
        arr = np.array(pts).reshape(-1, 3)
        for g in union_find_components(arr, link / 0.05):
            if len(g) >= 2:
                expected.add((cat, frozenset(pts[i] for i in g)))
    assert {(o.category, o.member_voxels) for o in objs} == expected
    for o in objs:
        arr = np.array(sorted(o.member_voxels))
        assert o.box.lo == pytest.approx(tuple(arr.min(axis=0) * 0.05))
        assert o.box.hi == pytest.approx(tuple((arr.max(axis=0) + 1) * 0.05))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_incremental_clustering_equals_full(seed):
    rng = np.random.default_rng(seed)
    state = StateMemory(Box((0, 0, 0), (5, 5, 3)))
    for _ in range(4):
        batch = [(tuple(int(v) for v in rng.integers(0, 10, 3)), ("Apple", "Bread")[int(rng.integers(2))], 1.0)
                 for _ in range(30)]
        fuse(state, batch)
        inc = cluster_objects(state, 0.1, 2, incremental=True)
        full = cluster_objects(state.copy(), 0.1, 2, incremental=False)
        assert [(o.object_id, o.member_voxels) for o in inc] == [(o.object_id, o.member_voxels) for o in full]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15), st.integers(0, 3)),
                         min_size=1, max_size=6, unique=True), max_size=8))
def test_fragment_merge_properties(groups):
    # keep groups disjoint as they would be after clustering
    seen: set = set()
    clean = []
    for g in groups:
        g = tuple(sorted(set(g) - seen))
        if g:
            seen |= set(g)
            clean.append(g)
    merged = merge_overlapping(clean)
    assert sorted(v for g in merged for v in g) == sorted(seen)
    boxes = [(np.min(g, axis=0), np.max(g, axis=0)) for g in merged]
    for (alo, ahi), (blo, bhi) in itertools.combinations(boxes, 2):
        assert not (np.all(alo <= bhi) and np.all(blo <= ahi))
    assert sorted(merge_overlapping(merged)) == sorted(merged)


def test_fusion_is_additive():
    state = StateMemory(Box((0, 0, 0), (1, 1, 1)))
    fuse(state, [((1, 1, 1), PLAIN, 0.6)])
    fuse(state, [((1, 1, 1), PLAIN, 0.6)])
    v = state.grid[(1, 1, 1)]
    assert v.category_scores[PLAIN] == pytest.approx(1.2) and v.observed_count == 2


def test_fusing_nothing_changes_nothing():
    state = StateMemory(Box((0, 0, 0), (1, 1, 1)))
    fuse(state, [])
    assert state.grid == {} and not state.observed.any()


def test_conflicting_labels_flip_only_when_votes_exceed():
    state = StateMemory(Box((0, 0, 0), (1, 1, 1)))
    c = (0, 0, 0)
    fuse(state, [(c, "Apple", 0.9)])
    fuse(state, [(c, "Bread", 0.4)])
    fuse(state, [(c, "Bread", 0.4)])
    assert state.grid[c].category == "Apple"
    fuse(state, [(c, "Bread", 0.4)])
    assert state.grid[c].category == "Bread"


def test_empty_state_gives_empty_graph():
    g = build_scene_graph(StateMemory(Box((0, 0, 0), (1, 1, 1))))
    assert g.objects == () and not g.relations


def test_center_pixel_backprojects_along_the_view_axis(bedroom):
    from embodiedqa.catalog import CATEGORY_INDEX
    from embodiedqa.scene.camera import Observation
    cfg = SceneConfig()
    h, w = cfg.image_height, cfg.image_width
    cat = np.full((h, w), -1)
    cat[h // 2, w // 2] = CATEGORY_INDEX[PLAIN]
    d = 1.3
    vp = Viewport(2.125, 2.125, 0.0, 0.0)
    obs = Observation(cat, cat.copy(), np.full((h, w), d), (cat >= 0).astype(float), vp)
    (coord, label, conf), = backproject(obs, vp, 0.05, bedroom.room)
    # the middle pixel sits half a pixel off the optical axis
    p = np.array([vp.x + d, vp.y, cfg.camera_height])
    assert np.abs(np.array(coord) - np.floor(p / 0.05)).max() <= 1
    assert label == PLAIN and conf == 1.0


def test_no_labeled_pixels_backproject_to_nothing(bedroom):
    from embodiedqa.config import NoiseConfig
    vp = spawn_pose(bedroom)
    obs = render_observation(bedroom, vp, NoiseConfig(dropout=1.0, confusion=0.0), np.random.default_rng(0))
    assert backproject(obs, vp, 0.05, bedroom.room) == []


def test_backprojected_labels_match_direct_voxelization(bedroom):
    vs = 0.05
    state = StateMemory(bedroom.room, vs)
    sp = spawn_pose(bedroom)
    for k in range(8):
        vp = Viewport(sp.x, sp.y, k * math.pi / 4, 0.0)
        fuse(state, backproject(render_observation(bedroom, vp), vp, vs, bedroom.room))
    origin = np.array(bedroom.room.lo)
    agree = 0
    for c, v in state.grid.items():
        cell = Box(tuple(origin + np.array(c) * vs), tuple(origin + (np.array(c) + 1) * vs))
        cats = {o.category for o in bedroom.objects
                if all(cell.lo[i] <= o.box.hi[i] + 1e-9 and o.box.lo[i] <= cell.hi[i] + 1e-9 for i in range(3))}
        agree += v.category in cats
    assert state.grid and agree / len(state.grid) >= 0.99


def test_scene_graph_cache_is_coherent(bedroom):
    state = StateMemory(bedroom.room, 0.05)
    vp = spawn_pose(bedroom)
    fuse(state, backproject(render_observation(bedroom, vp), vp, 0.05, bedroom.room))
    first = build_scene_graph(state)
    assert build_scene_graph(state) is first
    fresh = state.copy()
    again = build_scene_graph(fresh, ReconConfig(incremental=False))
    assert first == again


def test_graph_dump_round_trip_and_self_match(tmp_path, scenes):
    for s in scenes:
        g = ground_truth_scene_graph(s)
        dump_graph(g, tmp_path / "g.json")
        assert load_graph(tmp_path / "g.json") == g
        m = match_graphs(g, g)
        assert m["categories_equal"] and m["relation_recall"] == 1.0


def test_graph_from_objects_relates_existing_objects_only():
    objs = [SceneObject(f"{c}#0", c, Box((i, 0, 0), (i + 0.3, 0.3, 0.3))) for i, c in enumerate(CATS)]
    g = SceneGraph.from_objects(objs)
    ids = {o.object_id for o in objs}
    assert all(s in ids and o in ids for s, _, o in g.relations)
    assert set(g.relations) == derive_relations(objs)
