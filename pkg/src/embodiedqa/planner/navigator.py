"""Navigation policy: relevant regions, stopping and route following."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..config import PlannerConfig, RelationConfig
from ..scene.agent import STOP
from .mcts import Route, plan_route_mcts
from .regions import RelevantRegion, relevant_regions
from .scenemap import Pose, SceneMap

log = logging.getLogger(__name__)


def should_stop(region: RelevantRegion, universe: np.ndarray, threshold: float,
                reference: int | None = None) -> bool:
    """True when the coverable part of ``region`` is at most ``threshold`` of ``reference``.

    ``reference`` defaults to the coverable part of the region itself, so only
    an empty region stops unless a larger reference volume is given.
    """
    remaining = int((region.voxels & universe).sum())
    if remaining == 0:
        return True
    ref = remaining if reference is None else max(reference, 1)
    return remaining / ref <= threshold


def candidate_viewports(smap: SceneMap, region: RelevantRegion) -> list[Pose]:
    """Candidate poses that see at least one relevant cell."""
    return [smap.candidates[i] for i in smap.candidates_seeing(region.voxels)]


def plan_route(smap: SceneMap, target: np.ndarray, poses: list[Pose], cfg: PlannerConfig) -> tuple[Route, np.ndarray]:
    """MCTS over the candidates that see ``target``; returns the route and candidate ids."""
    cand = smap.candidates_seeing(target)
    cols = np.nonzero(target)[0]
    vis = smap.candidate_vis[np.ix_(cand, cols)]
    cc = smap.candidate_costs()[np.ix_(cand, cand)]
    start = np.stack([smap.costs_from(p)[cand] for p in poses])
    route = plan_route_mcts(vis, cc, start, cfg.rollouts, cfg.exploration, cfg.children, cfg.horizon)
    return route, cand


@dataclass
class Navigator:
    """Per-question planning state for one or more agents sharing a memory."""
    smap: SceneMap
    triplets: frozenset | None  # None: no pruning (full scan)
    cfg: PlannerConfig = field(default_factory=PlannerConfig)
    relation_cfg: RelationConfig = field(default_factory=RelationConfig)
    region: RelevantRegion | None = None
    reference: int | None = None
    queues: list = field(default_factory=list)
    plans: int = 0
    _anchor_key: tuple | None = None
    _steps_since_region: int = 0

    @property
    def full_scan(self) -> bool:
        return self.cfg.full_scan or self.triplets is None

    def update_region(self, observed: np.ndarray, objects) -> bool:
        """Recompute the region; True when the pruning changed."""
        key = tuple(sorted((o.category, o.box.lo, o.box.hi) for o in objects))
        changed = key != self._anchor_key
        self._anchor_key = key
        self.region = relevant_regions(observed, self.smap.grid, objects, self.triplets or (),
                                       self.relation_cfg, self.full_scan)
        self._steps_since_region = 0
        if self.reference is None:
            self.reference = int((self.region.voxels & self.smap.universe).sum())
        return changed and not self.full_scan

    def _target(self, observed: np.ndarray) -> np.ndarray:
        return self.region.voxels & ~observed & self.smap.universe

    def _replan(self, observed: np.ndarray, poses: list[Pose]) -> None:
        target = self._target(observed)
        route, cand = plan_route(self.smap, target, poses, self.cfg)
        self.queues = [[int(cand[c]) for c in seq] for seq in route.sequences]
        self.plans += 1
        log.debug("plan %d: %d target cells, route length %.0f", self.plans, int(target.sum()), route.length)

    def step(self, observed: np.ndarray, objects, poses: list[Pose]) -> list:
        """One action per agent (None for an idle agent); all STOP when done.

        ``objects`` is the detected object list or a callable producing it;
        it is only consulted when the region is recomputed.
        """
        n = len(poses)
        if callable(objects):
            get_objects = objects
        else:
            def get_objects():
                return objects
        if self.region is None:
            self.update_region(observed, get_objects())
        else:
            self._steps_since_region += 1
            if (self._steps_since_region >= self.cfg.replan_every
                    and self.update_region(observed, get_objects())):
                self.queues = []
        for attempt in range(2):
            target = self._target(observed)
            actions = self._follow(target, poses)
            if any(a is not None for a in actions):
                return actions
            if attempt == 0:
                self.update_region(observed, get_objects())
                if should_stop(self.region, self.smap.universe, self.cfg.stop_threshold, self.reference):
                    return [STOP] * n
                self._replan(observed, poses)
        # the planner found nothing it can reach
        return [STOP] * n

    def _follow(self, target: np.ndarray, poses: list[Pose]) -> list:
        if len(self.queues) < len(poses):
            self.queues += [[] for _ in range(len(poses) - len(self.queues))]
        out = []
        for a, pose in enumerate(poses):
            q = self.queues[a]
            while q and (not (self.smap.candidate_vis[q[0]] & target).any()
                         or self.smap.candidates[q[0]] == pose):
                q.pop(0)
            out.append(self.smap.actions_to(pose, self.smap.candidates[q[0]])[0] if q else None)
        return out
