"""Episodes: an agent team exploring one scene and answering questions in turn."""
from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..config import Config, NoiseConfig
from ..kb import KnowledgeBase
from ..planner.navigator import Navigator
from ..planner.scenemap import Pose, scene_map
from ..priors import ScenePriors
from ..query.compiler import translate_question
from ..query.engine import execute, format_answer
from ..query.ir import QueryProgram
from ..query.store import build_store
from ..questions.ast import Answer, QuestionRecord
from ..recon.cluster import build_scene_graph
from ..recon.memory import StateMemory, backproject_batch, fuse
from ..scene.agent import ActionKind, apply_action
from ..scene.camera import render_observation
from ..scene.truth import ground_truth_scene_graph
from ..scene.world import spawn_pose

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Modes:
    """Ablation switches.  ``gt_segm`` turns perception noise off; ``gt_graph``
    answers from the true scene graph without moving."""
    gt_segm: bool = False
    gt_graph: bool = False
    full_scan: bool = False
    agents: int = 1

    def flags(self) -> tuple[str, ...]:
        out = [n for n in ("gt_segm", "gt_graph", "full_scan") if getattr(self, n)]
        return tuple(out)


@dataclass
class EpisodeResult:
    question_id: str
    scene_id: str
    qtype: str
    predicted: Answer | None
    truth: Answer | None
    path_length: int  # max over agents
    agent_lengths: tuple[int, ...] = ()
    turn: int = 0
    agents: int = 1
    flags: tuple[str, ...] = ()
    forced_stop: bool = False
    warnings: tuple[str, ...] = ()

    @property
    def correct(self) -> bool:
        if self.predicted is None or self.truth is None:
            return False
        return format_answer(self.predicted) == format_answer(self.truth)

    def to_json(self) -> dict:
        from ..questions.ast import answer_to_json
        return {"question_id": self.question_id, "scene_id": self.scene_id, "qtype": self.qtype,
                "predicted": answer_to_json(self.predicted) if self.predicted is not None else None,
                "truth": answer_to_json(self.truth) if self.truth is not None else None,
                "correct": self.correct, "path_length": self.path_length,
                "agent_lengths": list(self.agent_lengths), "turn": self.turn, "agents": self.agents,
                "flags": list(self.flags), "forced_stop": self.forced_stop}


_PRIOR_STORES: dict = {}


def plan_triplets(program: QueryProgram, kb: KnowledgeBase | None, priors: ScenePriors | None,
                  cfg: Config, warnings: list | None = None) -> frozenset:
    key = (id(kb), id(priors), cfg.planner.min_prior_count, cfg.planner.kb_candidates)
    hit = _PRIOR_STORES.get(key)
    if hit is None or hit[0] is not kb or hit[1] is not priors:
        store = build_store(None, kb, priors, cfg.planner.min_prior_count,
                            kb_candidates_on=cfg.planner.kb_candidates)
        hit = _PRIOR_STORES[key] = (kb, priors, store)
    return frozenset(execute(program, hit[2], warnings))


class Episode:
    """Persistent memory and agent poses across the questions of one scene."""

    def __init__(self, scene, kb: KnowledgeBase | None, priors: ScenePriors | None,
                 cfg: Config | None = None, modes: Modes | None = None, seed: int | None = None):
        self.scene = scene
        self.kb = kb
        self.priors = priors
        self.cfg = cfg or Config()
        self.modes = modes or Modes()
        seed = self.cfg.seed if seed is None else seed
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(scene.scene_id.encode()), 11]))
        self.noise = NoiseConfig.off() if self.modes.gt_segm else self.cfg.noise
        self.smap = scene_map(scene, self.cfg.scene, self.cfg.planner.stride)
        self.state = StateMemory(scene.room, self.cfg.scene.voxel_size, self.smap.grid)
        start = self.smap.pose_of(spawn_pose(scene))
        self.poses: list[Pose] = [start] * self.modes.agents
        self.turn = 0
        self.trace: list[tuple] = []  # (turn, agent, action, pose, newly observed cells)
        self.navigator: Navigator | None = None
        self.steps = 0
        if not self.modes.gt_graph:
            self._observe(start)

    def _observe(self, pose: Pose) -> int:
        """Render, back-project and fuse one view; returns the newly observed cell count."""
        before = int(self.state.observed.sum())
        vp = self.smap.viewport(pose)
        obs = render_observation(self.scene, vp, self.noise, self.rng, self.cfg.scene, self.steps)
        batch = backproject_batch(obs, vp, self.state.voxel_size, self.scene.room, self.cfg.scene)
        fuse(self.state, batch, self.smap.visibility(pose))
        return int(self.state.observed.sum()) - before

    def graph(self):
        return build_scene_graph(self.state, self.cfg.recon, self.cfg.relations)

    def explore(self, triplets: frozenset | None, turn: int | None = None) -> tuple[list[int], bool]:
        """Drive the agents until the navigator stops; ``None`` triplets scan everything.

        Returns the per-agent action counts and whether the step budget ran out.
        """
        turn = self.turn if turn is None else turn
        planner_cfg = self.cfg.planner
        nav = self.navigator = Navigator(self.smap, triplets, planner_cfg, self.cfg.relations)
        lengths = [0] * len(self.poses)
        while True:
            if max(lengths) >= planner_cfg.step_budget:
                return lengths, True
            actions = nav.step(self.state.observed, lambda: self.graph().objects, self.poses)
            if all(a is not None and a.kind is ActionKind.STOP for a in actions):
                return lengths, False
            for i, a in enumerate(actions):
                if a is None:
                    continue
                vp, _ = apply_action(self.scene, self.smap.viewport(self.poses[i]), a, self.cfg.scene)
                self.poses[i] = self.smap.pose_of(vp)
                lengths[i] += 1
                self.steps += 1
                self.trace.append((turn, i, a.kind.value, self.poses[i], self._observe(self.poses[i])))

    def ask(self, question: QuestionRecord | str, truth: Answer | None = None) -> EpisodeResult:
        if isinstance(question, QuestionRecord):
            text, qid, truth = question.text, question.question_id, question.answer
        else:
            text, qid = question, f"{self.scene.scene_id}_free{self.turn}"
        warnings: list[str] = []
        p_ans, p_plan = translate_question(text, self.kb)
        turn = self.turn
        self.turn += 1
        if self.modes.gt_graph:
            store = build_store(ground_truth_scene_graph(self.scene, self.cfg.relations), self.kb)
            pred = execute(p_ans, store, warnings)
            return EpisodeResult(qid, self.scene.scene_id, p_ans.qtype, pred, truth, 0,
                                 (0,) * self.modes.agents, turn, self.modes.agents, self.modes.flags(),
                                 False, tuple(warnings))
        try:
            triplets = None if self.modes.full_scan else plan_triplets(p_plan, self.kb, self.priors,
                                                                        self.cfg, warnings)
        except Exception as exc:  # planning failure falls back to scanning everything
            log.warning("planning program failed (%s); scanning the whole room", exc)
            triplets = None
        lengths, forced = self.explore(triplets, turn)
        store = build_store(self.graph(), self.kb)
        pred = execute(p_ans, store, warnings)
        return EpisodeResult(qid, self.scene.scene_id, p_ans.qtype, pred, truth, max(lengths),
                             tuple(lengths), turn, self.modes.agents, self.modes.flags(), forced,
                             tuple(warnings))


def run_episode(scene, question: QuestionRecord, kb: KnowledgeBase | None, priors: ScenePriors | None,
                cfg: Config | None = None, modes: Modes | None = None) -> EpisodeResult:
    """Fresh memory, one question."""
    return Episode(scene, kb, priors, cfg, modes).ask(question)
