"""Discrete agent kinematics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from ..config import NoiseConfig, SceneConfig
from .camera import Observation, Viewport, heading_index, render_observation, tilt_index
from .nav import disk_clear


class ActionKind(str, Enum):
    MOVE_AHEAD = "MoveAhead"
    ROTATE_LEFT = "RotateLeft"
    ROTATE_RIGHT = "RotateRight"
    LOOK_UP = "LookUp"
    LOOK_DOWN = "LookDown"
    STOP = "Stop"


@dataclass(frozen=True)
class AgentAction:
    kind: ActionKind
    step: float | None = None  # MoveAhead distance; None means the configured step

    def __str__(self) -> str:
        return self.kind.value


MOVE_AHEAD = AgentAction(ActionKind.MOVE_AHEAD)
ROTATE_LEFT = AgentAction(ActionKind.ROTATE_LEFT)
ROTATE_RIGHT = AgentAction(ActionKind.ROTATE_RIGHT)
LOOK_UP = AgentAction(ActionKind.LOOK_UP)
LOOK_DOWN = AgentAction(ActionKind.LOOK_DOWN)
STOP = AgentAction(ActionKind.STOP)


class StepResult(NamedTuple):
    pose: Viewport
    observation: Observation | None
    blocked: bool
    done: bool


def snap_pose(x: float, y: float, heading: int, tilt: int, cfg: SceneConfig) -> Viewport:
    theta = (heading % cfg.n_headings) * cfg.rotate_quantum
    return Viewport(round(x, 9), round(y, 9), theta, tilt * cfg.tilt_quantum)


def move_clear(scene, x0: float, y0: float, x1: float, y1: float, cfg: SceneConfig) -> bool:
    """Every point of the straight move keeps the agent disk clear (sampled finer than the disk)."""
    n = max(1, int(math.ceil(math.hypot(x1 - x0, y1 - y0) / (cfg.agent_radius / 2))))
    for s in range(1, n + 1):
        f = s / n
        if not disk_clear(x0 + f * (x1 - x0), y0 + f * (y1 - y0), scene.obstacles, scene.room,
                          cfg.agent_radius):
            return False
    return True


def apply_action(scene, pose: Viewport, action: AgentAction, cfg: SceneConfig) -> tuple[Viewport, bool]:
    """Pose update only.  Returns (new pose, blocked)."""
    h = heading_index(pose.theta, cfg)
    t = tilt_index(pose.phi, cfg)
    lo, hi = cfg.tilt_levels[0], cfg.tilt_levels[-1]
    kind = action.kind
    if kind is ActionKind.ROTATE_LEFT:
        return snap_pose(pose.x, pose.y, h + 1, t, cfg), False
    if kind is ActionKind.ROTATE_RIGHT:
        return snap_pose(pose.x, pose.y, h - 1, t, cfg), False
    if kind is ActionKind.LOOK_UP:
        if t >= hi:
            return pose, True
        return snap_pose(pose.x, pose.y, h, t + 1, cfg), False
    if kind is ActionKind.LOOK_DOWN:
        if t <= lo:
            return pose, True
        return snap_pose(pose.x, pose.y, h, t - 1, cfg), False
    if kind is ActionKind.MOVE_AHEAD:
        dist = cfg.step_size if action.step is None else min(action.step, cfg.step_size)
        theta = h * cfg.rotate_quantum
        x1 = pose.x + dist * math.cos(theta)
        y1 = pose.y + dist * math.sin(theta)
        if not move_clear(scene, pose.x, pose.y, x1, y1, cfg):
            return pose, True
        return snap_pose(x1, y1, h, t, cfg), False
    return pose, False


def step(scene, pose: Viewport, action: AgentAction, cfg: SceneConfig | None = None,
         noise: NoiseConfig | None = None, rng: np.random.Generator | None = None,
         step_index: int = 0, render: bool = True) -> StepResult:
    cfg = cfg or SceneConfig()
    new_pose, blocked = apply_action(scene, pose, action, cfg)
    done = action.kind is ActionKind.STOP
    obs = render_observation(scene, new_pose, noise, rng, cfg, step_index) if render else None
    return StepResult(new_pose, obs, blocked, done)
