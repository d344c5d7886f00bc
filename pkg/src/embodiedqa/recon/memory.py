"""Labeled-voxel state memory: back-projection and additive fusion."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..catalog import CATEGORY_NAMES
from ..config import SceneConfig
from ..geometry import Box
from ..scene.camera import GridSpec, Observation, Viewport, camera_origin, pixel_dirs

# pushes a surface hit just inside the surface it hit
HIT_OFFSET = 1e-4


@dataclass
class LabeledVoxel:
    coord: tuple[int, int, int]
    category_scores: dict[str, float] = field(default_factory=dict)
    observed_count: int = 0

    @property
    def category(self) -> str | None:
        if not self.category_scores:
            return None
        # ties go to the alphabetically first label so argmax is deterministic
        return min(self.category_scores.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    @property
    def confidence(self) -> float:
        cat = self.category
        return self.category_scores[cat] / self.observed_count if cat else 0.0


@dataclass(frozen=True)
class VoxelBatch:
    """Back-projected pixels as parallel arrays; iterates as (coord, category, confidence)."""
    coords: np.ndarray  # (N, 3) int
    codes: np.ndarray  # (N,) category codes
    confidence: np.ndarray  # (N,)

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self):
        for c, k, w in zip(self.coords, self.codes, self.confidence):
            yield (tuple(int(v) for v in c), CATEGORY_NAMES[int(k)], float(w))

    @classmethod
    def from_list(cls, items) -> "VoxelBatch":
        from ..catalog import CATEGORY_INDEX
        items = list(items)
        if not items:
            return cls(np.zeros((0, 3), dtype=np.int64), np.zeros(0, dtype=np.int32), np.zeros(0))
        coords = np.array([c for c, _, _ in items], dtype=np.int64)
        codes = np.array([CATEGORY_INDEX[k] for _, k, _ in items], dtype=np.int32)
        conf = np.array([w for _, _, w in items], dtype=float)
        return cls(coords, codes, conf)


class StateMemory:
    """Persistent reconstruction for one episode (or a run of turns)."""

    def __init__(self, room: Box, voxel_size: float = 0.05, coverage: GridSpec | None = None):
        self.room = room
        self.voxel_size = voxel_size
        self.grid: dict[tuple[int, int, int], LabeledVoxel] = {}
        self.coverage = coverage or GridSpec.for_room(room, 0.25)
        self.observed = np.zeros(self.coverage.n_cells, dtype=bool)
        self.turn_index = 0
        self.version = 0
        self.dirty: set[str] = set()
        self._components: dict[str, list] = {}
        self._graph = None
        self._graph_key = None

    @property
    def observed_voxels(self) -> set[tuple[int, int, int]]:
        return {self.coverage.unflat(int(i)) for i in np.nonzero(self.observed)[0]}

    def voxels_of(self, cat: str) -> list[tuple[int, int, int]]:
        return [c for c, v in self.grid.items() if v.category == cat]

    def copy(self) -> "StateMemory":
        other = StateMemory(self.room, self.voxel_size, self.coverage)
        other.grid = {c: LabeledVoxel(c, dict(v.category_scores), v.observed_count)
                      for c, v in self.grid.items()}
        other.observed = self.observed.copy()
        other.turn_index = self.turn_index
        other.dirty = set(self.dirty) | {v.category for v in other.grid.values()}
        return other


def backproject_batch(obs: Observation, viewport: Viewport, voxel_size: float, room: Box,
                      cfg: SceneConfig | None = None) -> VoxelBatch:
    cfg = cfg or SceneConfig()
    lab = obs.category.reshape(-1) >= 0
    dirs = pixel_dirs(viewport, cfg)[lab]
    depth = obs.depth.reshape(-1)[lab]
    pts = camera_origin(viewport, cfg)[None, :] + (depth + HIT_OFFSET)[:, None] * dirs
    coords = np.floor((pts - np.array(room.lo)) / voxel_size).astype(np.int64)
    shape = np.round(np.array(room.extent) / voxel_size).astype(np.int64)
    inside = np.all((coords >= 0) & (coords < shape), axis=1)
    return VoxelBatch(coords[inside], obs.category.reshape(-1)[lab][inside],
                      obs.confidence.reshape(-1)[lab][inside])


def backproject(obs: Observation, viewport: Viewport, voxel_size: float, room: Box,
                cfg: SceneConfig | None = None) -> list[tuple[tuple[int, int, int], str, float]]:
    """Map every labeled pixel through its depth to one voxel; out-of-room hits are dropped."""
    return list(backproject_batch(obs, viewport, voxel_size, room, cfg))


def fuse(state: StateMemory, voxels, visible: np.ndarray | None = None) -> StateMemory:
    """Add each entry's confidence to its voxel's category score.

    ``visible`` is a flat mask (or index array) of coverage cells seen by the
    frame; they join ``observed``.  The state is updated in place and returned.
    """
    batch = voxels if isinstance(voxels, VoxelBatch) else VoxelBatch.from_list(voxels)
    if visible is not None:
        state.observed[visible] = True
    if len(batch) == 0:
        return state
    # aggregate repeated (voxel, label) entries of the frame before touching the dict
    keys = np.concatenate([batch.coords, batch.codes[:, None].astype(np.int64)], axis=1)
    uniq, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    sums = np.bincount(inv.reshape(-1), weights=batch.confidence, minlength=len(uniq))
    grid = state.grid
    for row, total, n in zip(uniq.tolist(), sums.tolist(), counts.tolist()):
        coord = (row[0], row[1], row[2])
        cat = CATEGORY_NAMES[row[3]]
        vox = grid.get(coord)
        if vox is None:
            vox = grid[coord] = LabeledVoxel(coord)
            before = None
        else:
            before = vox.category
        vox.category_scores[cat] = vox.category_scores.get(cat, 0.0) + total
        vox.observed_count += n
        after = vox.category
        if before != after:
            state.dirty.add(after)
            if before is not None:
                state.dirty.add(before)
    state.version += 1
    return state
