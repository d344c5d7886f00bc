"""Candidate viewports, their visibility and travel costs between poses.

Agents move on the 0.25 m lattice along the four axis headings; the diagonal
headings are for looking only.  Travel is breadth-first over (cell, heading)
states, and tilt changes add their own count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from ..config import SceneConfig
from ..scene.agent import (LOOK_DOWN, LOOK_UP, MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT, move_clear,
                           snap_pose)
from ..scene.camera import GridSpec, Viewport, coverage_mask, heading_index, tilt_index
from ..scene.nav import cell_center, cell_of, connected_from

# lattice offsets of MOVE_AHEAD for the axis headings (in 45 degree steps)
AXIS_MOVES = {0: (1, 0), 2: (0, 1), 4: (-1, 0), 6: (0, -1)}


@dataclass(frozen=True)
class Pose:
    """Lattice pose: cell, heading index, tilt level."""
    cell: tuple[int, int]
    heading: int
    tilt: int


class SceneMap:
    """Navigation and visibility tables for one scene, built once and cached."""

    def __init__(self, scene, cfg: SceneConfig | None = None, stride: float = 0.5):
        self.scene = scene
        self.cfg = cfg or SceneConfig()
        self.q = self.cfg.coverage_size
        self.grid = GridSpec.for_room(scene.room, self.q)
        self.n_headings = self.cfg.n_headings
        self.tilts = self.cfg.tilt_levels
        free = scene.free_lattice(self.q, self.cfg.agent_radius)
        spawn = cell_of(*self._spawn_xy(), self.q)
        self.reachable = connected_from(free, spawn)
        self.spawn_cell = spawn
        cells = [tuple(int(v) for v in c) for c in zip(*np.nonzero(self.reachable))]
        self.cells = cells
        self.cell_index = {c: i for i, c in enumerate(cells)}
        self._build_graph()
        self._build_candidates(stride)
        self._vis_cache: dict[Pose, np.ndarray] = {}
        self._dist_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _spawn_xy(self):
        sp = self.scene.layout.spawn
        return sp[0], sp[1]

    # travel graph ---------------------------------------------------------
    def state(self, cell, heading: int) -> int:
        return self.cell_index[tuple(cell)] * self.n_headings + heading % self.n_headings

    def _build_graph(self) -> None:
        h = self.n_headings
        rows, cols = [], []
        for ci, c in enumerate(self.cells):
            for k in range(h):
                s = ci * h + k
                rows += [s, s]
                cols += [ci * h + (k + 1) % h, ci * h + (k - 1) % h]
                if k in AXIS_MOVES:
                    di, dj = AXIS_MOVES[k]
                    nb = (c[0] + di, c[1] + dj)
                    if nb in self.cell_index and self._edge_clear(c, nb):
                        rows.append(s)
                        cols.append(self.cell_index[nb] * h + k)
        n = len(self.cells) * h
        self.graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()

    def _edge_clear(self, a, b) -> bool:
        x0, y0 = cell_center(a, self.q)
        x1, y1 = cell_center(b, self.q)
        return move_clear(self.scene, x0, y0, x1, y1, self.cfg)

    def distances_from(self, state: int) -> tuple[np.ndarray, np.ndarray]:
        """(distance, predecessor) arrays over all states from one state."""
        hit = self._dist_cache.get(state)
        if hit is None:
            d, pred = shortest_path(self.graph, method="D", unweighted=True, indices=state,
                                    return_predecessors=True)
            hit = self._dist_cache[state] = (d, pred)
        return hit

    # poses ------------------------------------------------------------------
    def pose_of(self, vp: Viewport) -> Pose:
        return Pose(cell_of(vp.x, vp.y, self.q), heading_index(vp.theta, self.cfg),
                    tilt_index(vp.phi, self.cfg))

    def viewport(self, pose: Pose) -> Viewport:
        x, y = cell_center(pose.cell, self.q)
        return snap_pose(x, y, pose.heading, pose.tilt, self.cfg)

    def visibility(self, pose: Pose) -> np.ndarray:
        """Flat mask of coverage cells the pose sees (ground-truth occlusion, see ``coverage_mask``)."""
        m = self._vis_cache.get(pose)
        if m is None:
            m = self._vis_cache[pose] = coverage_mask(self.scene, self.viewport(pose), self.grid, self.cfg)
        return m

    # candidates ---------------------------------------------------------------
    def _build_candidates(self, stride: float) -> None:
        k = max(1, int(round(stride / self.q)))
        si, sj = self.spawn_cell
        poses = []
        for c in self.cells:
            if (c[0] - si) % k == 0 and (c[1] - sj) % k == 0:
                for h in range(self.n_headings):
                    for t in self.tilts:
                        poses.append(Pose(c, h, t))
        self.candidates = poses
        vis = np.zeros((len(poses), self.grid.n_cells), dtype=bool)
        for i, p in enumerate(poses):
            vis[i] = coverage_mask(self.scene, self.viewport(p), self.grid, self.cfg)
        self.candidate_vis = vis
        self.universe = vis.any(axis=0)
        self.candidate_state = np.array([self.state(p.cell, p.heading) for p in poses], dtype=np.int64)
        self.candidate_tilt = np.array([p.tilt for p in poses], dtype=np.int64)
        positions = sorted({p.cell for p in poses})
        # travel between candidate positions for every heading pair
        srcs = np.array(sorted({int(s) for s in self.candidate_state}))
        d = shortest_path(self.graph, method="D", unweighted=True, indices=srcs)
        col = {int(s): i for i, s in enumerate(srcs)}
        sub = d[:, srcs]
        idx = np.array([col[int(s)] for s in self.candidate_state])
        self._cc_state = sub[np.ix_(idx, idx)]
        self.positions = positions

    def candidate_costs(self) -> np.ndarray:
        """Action counts between every pair of candidates."""
        tilt = np.abs(self.candidate_tilt[:, None] - self.candidate_tilt[None, :])
        return self._cc_state + tilt

    def costs_from(self, pose: Pose) -> np.ndarray:
        d, _ = self.distances_from(self.state(pose.cell, pose.heading))
        return d[self.candidate_state] + np.abs(self.candidate_tilt - pose.tilt)

    def candidates_seeing(self, region: np.ndarray) -> np.ndarray:
        """Indices of candidates that see at least one cell of ``region``."""
        return np.nonzero((self.candidate_vis & region[None, :]).any(axis=1))[0]

    # action realization -------------------------------------------------------
    def actions_to(self, start: Pose, goal: Pose) -> list:
        """Shortest primitive-action sequence from ``start`` to ``goal``."""
        s = self.state(start.cell, start.heading)
        g = self.state(goal.cell, goal.heading)
        d, pred = self.distances_from(s)
        if not math.isfinite(d[g]):
            raise ValueError(f"{goal} is unreachable from {start}")
        chain = [g]
        while chain[-1] != s:
            chain.append(int(pred[chain[-1]]))
        chain.reverse()
        actions = []
        h = self.n_headings
        for a, b in zip(chain, chain[1:]):
            ha, hb = a % h, b % h
            if a // h != b // h:
                actions.append(MOVE_AHEAD)
            elif (ha + 1) % h == hb:
                actions.append(ROTATE_LEFT)
            else:
                actions.append(ROTATE_RIGHT)
        dt = goal.tilt - start.tilt
        actions += [LOOK_UP] * max(dt, 0) + [LOOK_DOWN] * max(-dt, 0)
        return actions


def scene_map(scene, cfg: SceneConfig | None = None, stride: float = 0.5) -> SceneMap:
    cache = scene.cache()
    key = ("scene_map", cfg or SceneConfig(), stride)
    if key not in cache:
        cache[key] = SceneMap(scene, cfg, stride)
    return cache[key]
