"""Scene-graph reconstruction from labeled observations."""
from .cluster import build_scene_graph, cluster_objects, derive_relations
from .graph import SceneGraph, SceneObject, dump_graph, load_graph, match_graphs
from .memory import LabeledVoxel, StateMemory, VoxelBatch, backproject, backproject_batch, fuse
from .relations import Relation, directed_relations, pairwise_relations

__all__ = [
    "build_scene_graph", "cluster_objects", "derive_relations", "SceneGraph", "SceneObject",
    "dump_graph", "load_graph", "match_graphs", "LabeledVoxel", "StateMemory", "VoxelBatch",
    "backproject", "backproject_batch", "fuse", "Relation", "directed_relations",
    "pairwise_relations",
]
