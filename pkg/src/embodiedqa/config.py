"""Run configuration.

Every tunable default of the pipeline lives here so that a single JSON file
(``--config``) can override any of them.  Nested sections mirror the package
layout: ``scene``, ``noise``, ``relations``, ``recon``, ``questions``,
``planner``, ``kb``.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


@dataclass(frozen=True)
class SceneConfig:
    voxel_size: float = 0.05
    coverage_size: float = 0.25
    image_width: int = 80
    image_height: int = 80
    hfov_deg: float = 90.0
    camera_height: float = 1.5
    step_size: float = 0.25
    rotate_deg: float = 45.0
    tilt_deg: float = 30.0
    tilt_min_deg: float = -30.0
    tilt_max_deg: float = 30.0
    agent_radius: float = 0.1
    placement_retries: int = 25
    # same-category instances must stay farther apart than the clustering link
    same_category_gap: float = 0.25
    robust_relations: bool = True

    @property
    def rotate_quantum(self) -> float:
        return math.radians(self.rotate_deg)

    @property
    def tilt_quantum(self) -> float:
        return math.radians(self.tilt_deg)

    @property
    def n_headings(self) -> int:
        return int(round(360.0 / self.rotate_deg))

    @property
    def tilt_levels(self) -> tuple[int, ...]:
        lo = int(round(self.tilt_min_deg / self.tilt_deg))
        hi = int(round(self.tilt_max_deg / self.tilt_deg))
        return tuple(range(lo, hi + 1))


@dataclass(frozen=True)
class NoiseConfig:
    dropout: float = 0.1
    confusion: float = 0.02
    confidence_low: float = 0.6
    confidence_high: float = 1.0

    @classmethod
    def off(cls) -> "NoiseConfig":
        return cls(dropout=0.0, confusion=0.0, confidence_low=1.0, confidence_high=1.0)

    @property
    def enabled(self) -> bool:
        return self.dropout > 0 or self.confusion > 0 or self.confidence_low < 1.0


@dataclass(frozen=True)
class RelationConfig:
    near_distance: float = 0.25
    above_xy_distance: float = 0.25
    # minimum vertical clearance for Above/Below; one voxel absorbs
    # reconstruction quantisation of resting contacts
    above_gap: float = 0.05
    on_epsilon: float = 0.05
    # voxel-level analogue used by the planner
    voxel_above_height: float = 0.25
    support_height: float = 0.25


@dataclass(frozen=True)
class ReconConfig:
    link_distance: float | None = None  # None -> two voxel diagonals
    min_voxels: int = 4
    incremental: bool = True
    merge_overlapping: bool = True  # fuse same-label fragments whose boxes overlap

    def link(self, voxel_size: float) -> float:
        if self.link_distance is not None:
            return self.link_distance
        return 2.0 * math.sqrt(3.0) * voxel_size


@dataclass(frozen=True)
class QuestionConfig:
    kb_probability: float = 0.5
    scene_probability: float = 0.4
    questions_per_type: int = 300
    max_count: int = 4
    max_attempts: int = 60


@dataclass(frozen=True)
class PlannerConfig:
    rollouts: int = 200
    exploration: float = 1.0
    stride: float = 0.5
    stop_threshold: float = 0.02
    agents: int = 1
    replan_every: int = 5
    children: int = 8
    horizon: int = 3
    step_budget: int = 1000
    full_scan: bool = False
    kb_candidates: bool = True
    min_prior_count: int = 1

    def __post_init__(self) -> None:
        if self.rollouts < 1:
            raise ValueError("rollouts must be >= 1")
        if not 0.0 <= self.stop_threshold <= 0.1:
            raise ValueError("stop_threshold must lie in [0, 0.1]")
        if self.agents < 1:
            raise ValueError("agents must be >= 1")


@dataclass(frozen=True)
class KBConfig:
    closure_hops: int = 3


@dataclass(frozen=True)
class Config:
    scene: SceneConfig = field(default_factory=SceneConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    relations: RelationConfig = field(default_factory=RelationConfig)
    recon: ReconConfig = field(default_factory=ReconConfig)
    questions: QuestionConfig = field(default_factory=QuestionConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    kb: KBConfig = field(default_factory=KBConfig)
    seed: int = 0

    def replace(self, **sections: Any) -> "Config":
        """Return a copy with whole sections or section fields swapped.

        ``cfg.replace(planner={"agents": 2}, seed=3)`` updates one field of the
        planner section and the top-level seed.
        """
        updates = {}
        for name, value in sections.items():
            current = getattr(self, name)
            if isinstance(value, dict) and dataclasses.is_dataclass(current):
                value = dataclasses.replace(current, **value)
            updates[name] = value
        return dataclasses.replace(self, **updates)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        kinds = {f.name: f.type for f in dataclasses.fields(cls)}
        sections = {
            "scene": SceneConfig, "noise": NoiseConfig, "relations": RelationConfig,
            "recon": ReconConfig, "questions": QuestionConfig,
            "planner": PlannerConfig, "kb": KBConfig,
        }
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key not in kinds:
                raise KeyError(f"unknown config section {key!r}")
            if key in sections:
                kwargs[key] = sections[key](**value)
            else:
                kwargs[key] = value
        return cls(**kwargs)


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    with open(path, encoding="utf-8") as fh:
        return Config.from_dict(json.load(fh))


def save_config(cfg: Config, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2), encoding="utf-8")
