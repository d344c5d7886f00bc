from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from embodiedqa.config import NoiseConfig, RelationConfig, SceneConfig
from embodiedqa.geometry import Box, overlaps
from embodiedqa.scene.agent import (LOOK_DOWN, LOOK_UP, MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT, STOP,
                                    apply_action, move_clear, step)
from embodiedqa.scene.camera import (GridSpec, Viewport, coverage_mask, floor_probes, pixel_dirs,
                                     render_observation, visible_mask, visible_voxels)
from embodiedqa.scene.layout import generate_layouts
from embodiedqa.scene.truth import ground_truth_scene_graph
from embodiedqa.scene.world import generate_scene, load_scene, save_scene, spawn_pose
from embodiedqa.recon.relations import directed_relations

CFG = SceneConfig()
CFG_REL = RelationConfig()


def _camera(vp: Viewport, cfg: SceneConfig = CFG):
    f = np.array([math.cos(vp.phi) * math.cos(vp.theta), math.cos(vp.phi) * math.sin(vp.theta), math.sin(vp.phi)])
    r = np.array([math.sin(vp.theta), -math.cos(vp.theta), 0.0])
    u = np.cross(r, f)
    return np.array([vp.x, vp.y, cfg.camera_height]), f, r, u


def raymarch_visible(scene, vp: Viewport, points: np.ndarray, step: float = 0.002) -> np.ndarray:
    """Independent oracle: frustum by angles, occlusion by marching toward each point."""
    origin, f, r, u = _camera(vp)
    prims = scene.primitives
    half = math.radians(CFG.hfov_deg) / 2
    out = np.zeros(len(points), dtype=bool)
    for i, p in enumerate(points):
        rel = p - origin
        zf = rel @ f
        if zf <= 0 or abs(math.atan2(rel @ r, zf)) > half + 1e-9 or abs(math.atan2(rel @ u, zf)) > half + 1e-9:
            continue
        dist = float(np.linalg.norm(rel))
        ts = np.arange(step, dist - step, step)
        samples = origin + np.outer(ts / dist, rel)
        inside = ((samples[:, None, :] > prims.lo[None]) & (samples[:, None, :] < prims.hi[None])).all(axis=2)
        out[i] = not inside.any()
    return out


def test_regeneration_is_identical(layouts):
    a = generate_scene(layouts[0], 3)
    b = generate_scene(layouts[0], 3)
    assert a == b
    assert a.to_json() == b.to_json()


def test_objects_inside_room_and_disjoint(scenes):
    for s in scenes:
        shells = {o.instance_id for o in s.objects if o.container}
        for o in s.objects:
            assert o.box.inside(s.room)
        for i, a in enumerate(s.objects):
            for b in s.objects[i + 1:]:
                if a.instance_id in shells or b.instance_id in shells:
                    continue  # contents sit inside a hollow container
                assert not overlaps(a.box, b.box), (a.instance_id, b.instance_id)


def test_layout_without_slots_gives_furniture_only(layouts):
    bare = dataclasses.replace(layouts[0], placement_slots=())
    s = generate_scene(bare, 0)
    assert len(s.objects) == len(bare.fixed_furniture)


def test_presence_frequencies_follow_slot_probabilities(layouts):
    # zero capacity keeps every draw but skips placement, so 1000 samples are cheap
    layout = layouts[0]
    slots = tuple(dataclasses.replace(s, capacity=0) for s in layout.placement_slots)
    probe = dataclasses.replace(layout, placement_slots=slots)
    n = 1000
    hits: dict = {}
    for seed in range(n):
        for si, cat, count in generate_scene(probe, seed).draws:
            hits[(si, cat)] = hits.get((si, cat), 0) + (count > 0)
    for (si, cat), k in hits.items():
        p = next(prob for c, prob, _ in slots[si].categories if c == cat)
        assert abs(k / n - p) <= 0.03, (si, cat, k / n, p)


def test_scene_file_round_trip(tmp_path, bedroom):
    path = tmp_path / "s.json"
    save_scene(bedroom, path)
    assert load_scene(path) == bedroom


def test_visible_voxels_equal_raymarch_oracle(scenes):
    rng = np.random.default_rng(5)
    for s in scenes[:2]:
        grid = GridSpec.for_room(s.room, 0.25)
        sp = spawn_pose(s)
        for _ in range(2):
            vp = Viewport(sp.x, sp.y, float(rng.integers(8)) * math.pi / 4, float(rng.integers(-1, 2)) * math.pi / 6)
            fast = visible_mask(s, vp, grid)
            oracle = raymarch_visible(s, vp, grid.centers())
            assert np.array_equal(fast, oracle)


def test_visible_voxels_are_crossed_by_pixel_rays(bedroom):
    grid = GridSpec.for_room(bedroom.room, 0.25)
    vp = spawn_pose(bedroom)
    origin = np.array([vp.x, vp.y, CFG.camera_height])
    obs = render_observation(bedroom, vp)
    dirs = pixel_dirs(vp, CFG)
    depth = obs.depth.reshape(-1)
    for idx in np.nonzero(visible_mask(bedroom, vp, grid))[0]:
        box = grid.cell_box(grid.unflat(int(idx)))
        lo, hi = np.array(box.lo), np.array(box.hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            t1, t2 = (lo - origin) / dirs, (hi - origin) / dirs
        tn = np.nanmax(np.minimum(t1, t2), axis=1)
        tf = np.nanmin(np.maximum(t1, t2), axis=1)
        assert np.any((tf >= tn) & (tf > 0) & (tn <= depth)), idx


def test_wall_flush_view_sees_only_adjacent_cells(bedroom):
    grid = GridSpec.for_room(bedroom.room, 0.25)
    # face the x = 0 wall from just inside it
    vp = Viewport(0.125, 2.125, math.pi, 0.0)
    seen = visible_voxels(bedroom, vp, grid)
    assert all(c[0] == 0 for c in seen)


def test_occluded_object_has_no_visible_voxels():
    from embodiedqa.scene.layout import Furniture, SceneLayout
    from embodiedqa.scene.world import Scene, ObjectInstance
    room = Box((0, 0, 0), (3, 3, 2.5))
    wall = Furniture("Dresser_0", "Dresser", Box((1.0, 0.0, 0.0), (1.25, 3.0, 2.5)))
    layout = SceneLayout("Bedroom_x", "Bedroom", room, (wall,), (), (0.375, 1.375))
    target = Box((2.0, 1.0, 0.0), (2.5, 1.5, 0.5))
    scene = Scene(layout, (ObjectInstance.of("Dresser_0", "Dresser", wall.box),
                           ObjectInstance.of("Box_0", "Box", target)), 0)
    grid = GridSpec.for_room(room, 0.25)
    seen = visible_voxels(scene, Viewport(0.375, 1.375, 0.0, 0.0), grid)
    assert all(c[0] <= 3 for c in seen)


def test_coverage_requires_floor_probe(bedroom):
    grid = GridSpec.for_room(bedroom.room, 0.25)
    vp = spawn_pose(bedroom)
    cov = coverage_mask(bedroom, vp, grid)
    assert not (cov & ~visible_mask(bedroom, vp, grid)).any()
    probes = floor_probes(grid)
    assert np.allclose(probes[:, 2] % 0.25, 0.02)


def test_noiseless_render_labels_instance_pixels(bedroom):
    vp = spawn_pose(bedroom)
    obs = render_observation(bedroom, vp)
    labeled = obs.instance >= 0
    assert labeled.any()
    assert (obs.confidence[labeled] == 1.0).all()
    assert (obs.depth > 0).all()
    from embodiedqa.catalog import CATEGORY_INDEX
    for inst in np.unique(obs.instance[labeled]):
        assert (obs.category[obs.instance == inst] == CATEGORY_INDEX[bedroom.objects[inst].category]).all()


def test_full_dropout_labels_nothing(bedroom):
    obs = render_observation(bedroom, spawn_pose(bedroom), NoiseConfig(dropout=1.0, confusion=0.0),
                             np.random.default_rng(0))
    assert not obs.labeled.any()


def test_dropout_rate_matches_configuration(bedroom):
    vp = spawn_pose(bedroom)
    visible = np.unique(render_observation(bedroom, vp).instance)
    visible = visible[visible >= 0]
    rng = np.random.default_rng(0)
    noise = NoiseConfig(dropout=0.1, confusion=0.0)
    missed = total = 0
    for _ in range(1000):
        seen = set(np.unique(render_observation(bedroom, vp, noise, rng).instance).tolist())
        missed += sum(1 for i in visible if i not in seen)
        total += len(visible)
    assert abs(missed / total - 0.1) <= 0.02


def test_rotations_are_inverse(bedroom):
    vp = spawn_pose(bedroom)
    a, _ = apply_action(bedroom, vp, ROTATE_LEFT, CFG)
    b, _ = apply_action(bedroom, a, ROTATE_RIGHT, CFG)
    assert b == vp


def test_move_into_wall_is_blocked(bedroom):
    vp = Viewport(0.125, 2.125, math.pi, 0.0)
    new, blocked = apply_action(bedroom, vp, MOVE_AHEAD, CFG)
    assert blocked and new == vp


def test_stop_ends_episode_without_moving(bedroom):
    vp = spawn_pose(bedroom)
    res = step(bedroom, vp, STOP, render=False)
    assert res.done and res.pose == vp


@settings(max_examples=20, deadline=None)
@given(st.lists(st.sampled_from([MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT, LOOK_UP, LOOK_DOWN]), max_size=100))
def test_action_sequences_match_kinematics_replay(actions):
    scene = generate_scene(generate_layouts(0, 1)[0], 0)
    vp = spawn_pose(scene)
    x, y, h, t = vp.x, vp.y, 0, 0
    for a in actions:
        before = vp
        vp, _ = apply_action(scene, vp, a, CFG)
        # oracle: integer heading/tilt bookkeeping plus collision-checked translation
        if a is ROTATE_LEFT:
            h = (h + 1) % 8
        elif a is ROTATE_RIGHT:
            h = (h - 1) % 8
        elif a is LOOK_UP:
            t = min(t + 1, 1)
        elif a is LOOK_DOWN:
            t = max(t - 1, -1)
        else:
            nx = x + 0.25 * math.cos(h * math.pi / 4)
            ny = y + 0.25 * math.sin(h * math.pi / 4)
            if move_clear(scene, x, y, nx, ny, CFG):
                x, y = round(nx, 9), round(ny, 9)
        assert math.hypot(vp.x - before.x, vp.y - before.y) <= CFG.step_size + 1e-9
        assert (vp.x, vp.y) == pytest.approx((x, y), abs=1e-9)
        assert vp.theta == pytest.approx(h * math.pi / 4)
        assert vp.phi == pytest.approx(t * math.pi / 6)


def test_ground_truth_graph_uses_pairwise_rules(scenes):
    for s in scenes:
        g = ground_truth_scene_graph(s)
        objs = {o.object_id: o for o in g.objects}
        expected = set()
        for a in objs.values():
            for b in objs.values():
                if a.object_id != b.object_id:
                    for r in directed_relations(a.box, a.category, b.box, b.category, CFG_REL):
                        expected.add((a.object_id, r, b.object_id))
        assert set(g.relations) == expected


def test_empty_room_graph():
    from embodiedqa.recon.graph import SceneGraph
    assert SceneGraph.from_objects([]).objects == ()


def test_fruit_on_table_gives_three_on_relations():
    from embodiedqa.recon.graph import SceneGraph, SceneObject
    from embodiedqa.recon.relations import Relation
    table = SceneObject("DiningTable_0", "DiningTable", Box((1, 1, 0), (2, 2, 0.75)))
    items = [SceneObject(f"{c}_0", c, Box((1.1 + 0.3 * i, 1.4, 0.75), (1.2 + 0.3 * i, 1.5, 0.85)))
             for i, c in enumerate(("Apple", "Bread", "Tomato"))]
    g = SceneGraph.from_objects([table] + items)
    on = {(s, o) for s, r, o in g.relations if r is Relation.ON}
    assert on == {(o.object_id, "DiningTable_0") for o in items}
