"""Synthetic rooms, agent embodiment and observation rendering."""
from .agent import AgentAction, ActionKind, StepResult, step
from .camera import GridSpec, Observation, Viewport, render_observation, visible_mask, visible_voxels
from .layout import SceneLayout, Slot, generate_layout, generate_layouts, load_layouts, save_layouts
from .truth import ground_truth_scene_graph
from .world import ObjectInstance, Scene, generate_scene, load_scene, load_scenes, save_scene, save_scenes, spawn_pose

__all__ = [
    "AgentAction", "ActionKind", "StepResult", "step", "GridSpec", "Observation", "Viewport",
    "render_observation", "visible_mask", "visible_voxels", "SceneLayout", "Slot",
    "generate_layout", "generate_layouts", "load_layouts", "save_layouts",
    "ground_truth_scene_graph", "ObjectInstance", "Scene", "generate_scene", "load_scene",
    "load_scenes", "save_scene", "save_scenes", "spawn_pose",
]
