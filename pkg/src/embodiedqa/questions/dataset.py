"""Question pools and released datasets."""
from __future__ import annotations

import json
import zlib
from pathlib import Path

import numpy as np

from ..config import QuestionConfig
from ..kb import KnowledgeBase
from ..scene.truth import ground_truth_scene_graph
from .ast import QTYPES, QuestionRecord
from .balance import BalanceResult, balance, default_targets
from .generate import SceneFacts, sample_question


def scene_rng(seed: int, scene_id: str, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(scene_id.encode()), stream]))


def scene_facts(scene, kb: KnowledgeBase) -> SceneFacts:
    cache = scene.cache()
    key = ("facts", id(kb))
    if key not in cache:
        furniture = {f.category for f in scene.layout.fixed_furniture}
        cache[key] = SceneFacts.build(scene.room_type, ground_truth_scene_graph(scene), kb, furniture)
    return cache[key]


def generate_pool(scenes, kb: KnowledgeBase, split: str = "KEQA", seed: int = 0,
                  per_type: int | None = None, cfg: QuestionConfig | None = None) -> list[QuestionRecord]:
    """``per_type`` questions of every type for every scene; each scene has its own stream."""
    cfg = cfg or QuestionConfig()
    per_type = cfg.questions_per_type if per_type is None else per_type
    pool = []
    for scene in scenes:
        facts = scene_facts(scene, kb)
        rng = scene_rng(seed, scene.scene_id, 0 if split == "KEQA" else 1)
        for qtype in QTYPES:
            for _ in range(per_type):
                rec = sample_question(scene.scene_id, facts, kb, rng, split, qtype, cfg)
                if rec is not None:
                    pool.append(rec)
    return pool


def build_dataset(scenes, kb: KnowledgeBase, split: str = "KEQA", seed: int = 0,
                  per_type_target: int | None = None, per_scene: int | None = 10,
                  pool_per_type: int | None = None, targets: dict[str, int] | None = None,
                  cfg: QuestionConfig | None = None) -> BalanceResult:
    """Generate a pool over ``scenes`` and balance it.

    Without explicit targets each type gets ``per_scene * len(scenes) / 4``
    questions, spread evenly over its answers.
    """
    scenes = list(scenes)
    cfg = cfg or QuestionConfig()
    if targets is None:
        if per_type_target is None:
            per_type_target = (per_scene or 10) * len(scenes) // len(QTYPES)
        targets = default_targets(split, per_type_target, cfg.max_count)
    pool = generate_pool(scenes, kb, split, seed, pool_per_type, cfg)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    return balance(pool, targets, rng, per_scene=per_scene, max_count=cfg.max_count)


def save_dataset(records, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json()) + "\n")


def load_dataset(path: str | Path) -> list[QuestionRecord]:
    with open(path, encoding="utf-8") as fh:
        return [QuestionRecord.from_json(json.loads(line)) for line in fh if line.strip()]


def by_scene(records) -> dict[str, list[QuestionRecord]]:
    """Questions grouped per scene in dataset order (the order turns are asked in)."""
    out: dict[str, list[QuestionRecord]] = {}
    for r in records:
        out.setdefault(r.scene_id, []).append(r)
    return out
