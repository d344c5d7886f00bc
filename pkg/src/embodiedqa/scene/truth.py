"""Ground-truth scene graphs."""
from __future__ import annotations

from ..config import RelationConfig
from ..recon.graph import SceneGraph, SceneObject


def ground_truth_scene_graph(scene, cfg: RelationConfig | None = None) -> SceneGraph:
    cache = scene.cache()
    key = ("gt_graph", cfg or RelationConfig())
    if key not in cache:
        objs = [SceneObject(o.instance_id, o.category, o.box) for o in scene.objects]
        cache[key] = SceneGraph.from_objects(objs, cfg)
    return cache[key]
