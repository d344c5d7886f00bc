"""Pinhole camera: raycast rendering, the observation noise model and voxel visibility."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..catalog import CATEGORY_INDEX, vocabulary_for
from ..config import NoiseConfig, SceneConfig
from ..geometry import Box

EPS = 1e-9


@dataclass(frozen=True)
class Viewport:
    x: float
    y: float
    theta: float  # azimuth, 0 along +x, counter-clockwise
    phi: float  # inclination, positive looks up

    def key(self, cfg: SceneConfig) -> tuple[int, int, int, int]:
        """Integer pose key on the action lattice (x, y in centimeters)."""
        return (int(round(self.x * 1000)), int(round(self.y * 1000)),
                heading_index(self.theta, cfg), tilt_index(self.phi, cfg))


def heading_index(theta: float, cfg: SceneConfig) -> int:
    return int(round(theta / cfg.rotate_quantum)) % cfg.n_headings


def tilt_index(phi: float, cfg: SceneConfig) -> int:
    return int(round(phi / cfg.tilt_quantum))


def camera_basis(theta: float, phi: float):
    ct, st, cp, sp = math.cos(theta), math.sin(theta), math.cos(phi), math.sin(phi)
    forward = np.array([cp * ct, cp * st, sp])
    right = np.array([st, -ct, 0.0])
    up = np.array([-sp * ct, -sp * st, cp])
    return forward, right, up


def camera_origin(vp: Viewport, cfg: SceneConfig) -> np.ndarray:
    return np.array([vp.x, vp.y, cfg.camera_height])


@lru_cache(maxsize=256)
def _pixel_dirs(theta_key: int, phi_key: int, width: int, height: int, hfov_deg: float) -> np.ndarray:
    theta = theta_key * 1e-9
    phi = phi_key * 1e-9
    f, r, u = camera_basis(theta, phi)
    th = math.tan(math.radians(hfov_deg) / 2.0)
    tv = th * height / width
    xs = ((np.arange(width) + 0.5) / width * 2.0 - 1.0) * th
    ys = (1.0 - (np.arange(height) + 0.5) / height * 2.0) * tv
    gx, gy = np.meshgrid(xs, ys)
    d = f[None, None, :] + gx[..., None] * r[None, None, :] + gy[..., None] * u[None, None, :]
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    d = d.reshape(-1, 3)
    d.setflags(write=False)
    return d


def pixel_dirs(vp: Viewport, cfg: SceneConfig) -> np.ndarray:
    """Unit ray directions, row-major from the top-left pixel, shape (H*W, 3)."""
    return _pixel_dirs(int(round(vp.theta * 1e9)), int(round(vp.phi * 1e9)),
                       cfg.image_width, cfg.image_height, cfg.hfov_deg)


def ray_box_intervals(origin: np.ndarray, dirs: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Slab test of N rays against M boxes.  Returns (t_near, t_far), each (N, M)."""
    tn = tf = None
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        # one axis at a time keeps the temporaries at (N, M)
        for a in range(3):
            t1 = np.outer(inv[:, a], lo[:, a] - origin[a])
            t2 = np.outer(inv[:, a], hi[:, a] - origin[a])
            near, far = np.fmin(t1, t2), np.fmax(t1, t2)
            tn = near if tn is None else np.fmax(tn, near)
            tf = far if tf is None else np.fmin(tf, far)
    return tn, tf


def first_hits(origin: np.ndarray, dirs: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Nearest primitive hit per ray: (t, primitive index); t = inf on a miss."""
    tn, tf = ray_box_intervals(origin, dirs, lo, hi)
    hit = (tf >= tn) & (tn > 0)
    tn = np.where(hit, tn, np.inf)
    idx = np.argmin(tn, axis=1)
    t = tn[np.arange(len(dirs)), idx]
    return t, idx


@dataclass(frozen=True)
class Observation:
    category: np.ndarray  # (H, W) int, -1 unlabeled
    instance: np.ndarray  # (H, W) int, -1 unlabeled
    depth: np.ndarray  # (H, W) meters along the ray
    confidence: np.ndarray  # (H, W) in [0, 1], 0 where unlabeled
    viewport: Viewport
    step_index: int = 0

    @property
    def labeled(self) -> np.ndarray:
        return self.category >= 0


def render_observation(scene, viewport: Viewport, noise: NoiseConfig | None = None,
                       rng: np.random.Generator | None = None, cfg: SceneConfig | None = None,
                       step_index: int = 0) -> Observation:
    cfg = cfg or SceneConfig()
    noise = noise or NoiseConfig.off()
    prims = scene.primitives
    origin = camera_origin(viewport, cfg)
    dirs = pixel_dirs(viewport, cfg)
    t, idx = first_hits(origin, dirs, prims.lo, prims.hi)
    owner = prims.owner[idx]
    code = prims.category_code[idx].astype(np.int32)
    conf = np.where(code >= 0, 1.0, 0.0)
    inst = owner.copy()
    if noise.enabled:
        rng = rng if rng is not None else np.random.default_rng(0)
        visible = np.unique(owner[owner >= 0])
        drop = rng.random(len(visible)) < noise.dropout
        scores = rng.uniform(noise.confidence_low, noise.confidence_high, len(visible))
        lookup = np.full(len(scene.objects), -1.0)
        lookup[visible] = np.where(drop, -1.0, scores)
        per_pix = np.where(owner >= 0, lookup[np.maximum(owner, 0)], -1.0)
        kept = per_pix >= 0
        code = np.where(kept, code, -1)
        inst = np.where(kept, inst, -1)
        conf = np.where(kept, per_pix, 0.0)
        if noise.confusion > 0:
            vocab = np.array(sorted(CATEGORY_INDEX[c] for c in vocabulary_for(scene.room_type)))
            flip = kept & (rng.random(len(code)) < noise.confusion)
            n = int(flip.sum())
            if n:
                # a different label, uniform over the rest of the room vocabulary
                pos = np.searchsorted(vocab, code[flip])
                pick = rng.integers(0, len(vocab) - 1, n)
                code[flip] = vocab[pick + (pick >= pos)]
                conf[flip] = rng.uniform(noise.confidence_low, noise.confidence_high, n)
    shape = (cfg.image_height, cfg.image_width)
    return Observation(code.reshape(shape), inst.reshape(shape), t.reshape(shape),
                       conf.reshape(shape), viewport, step_index)


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned voxel grid anchored at the room's minimum corner."""
    size: float
    origin: tuple[float, float, float]
    shape: tuple[int, int, int]

    @classmethod
    def for_room(cls, room: Box, size: float) -> "GridSpec":
        shape = tuple(int(round(e / size)) for e in room.extent)
        return cls(size, room.lo, shape)

    @property
    def n_cells(self) -> int:
        return self.shape[0] * self.shape[1] * self.shape[2]

    def centers(self) -> np.ndarray:
        idx = np.indices(self.shape).reshape(3, -1).T
        return (idx + 0.5) * self.size + np.array(self.origin)

    def coords(self) -> np.ndarray:
        return np.indices(self.shape).reshape(3, -1).T

    def flat(self, coord) -> int:
        i, j, k = coord
        return (i * self.shape[1] + j) * self.shape[2] + k

    def unflat(self, index: int) -> tuple[int, int, int]:
        k = index % self.shape[2]
        j = (index // self.shape[2]) % self.shape[1]
        return (index // (self.shape[1] * self.shape[2]), j, k)

    def cell_box(self, coord) -> Box:
        lo = tuple(o + c * self.size for o, c in zip(self.origin, coord))
        return Box(lo, tuple(v + self.size for v in lo))


def in_frustum(vp: Viewport, points: np.ndarray, cfg: SceneConfig) -> np.ndarray:
    f, r, u = camera_basis(vp.theta, vp.phi)
    rel = points - camera_origin(vp, cfg)
    zf = rel @ f
    th = math.tan(math.radians(cfg.hfov_deg) / 2.0)
    tv = th * cfg.image_height / cfg.image_width
    return (zf > EPS) & (np.abs(rel @ r) <= th * zf + EPS) & (np.abs(rel @ u) <= tv * zf + EPS)


def points_visible(scene, viewport: Viewport, points: np.ndarray, cfg: SceneConfig | None = None) -> np.ndarray:
    """Per point: inside the frustum and reached by an unoccluded ray from the camera."""
    cfg = cfg or SceneConfig()
    mask = in_frustum(viewport, points, cfg)
    cand = np.nonzero(mask)[0]
    if len(cand) == 0:
        return mask
    origin = camera_origin(viewport, cfg)
    rel = points[cand] - origin
    dist = np.linalg.norm(rel, axis=1)
    dirs = rel / dist[:, None]
    prims = scene.primitives
    t_hit, _ = first_hits(origin, dirs, prims.lo, prims.hi)
    mask[cand] = t_hit >= dist - EPS
    return mask


def visible_mask(scene, viewport: Viewport, grid: GridSpec, cfg: SceneConfig | None = None) -> np.ndarray:
    """Flat boolean mask over ``grid``: center in the frustum and reached unoccluded.

    Centers inside solid geometry are never visible.
    """
    return points_visible(scene, viewport, grid.centers(), cfg)


FLOOR_PROBE = 0.02  # height of the coverage floor probe above the cell bottom


def inside_solid(scene, points: np.ndarray) -> np.ndarray:
    prims = scene.primitives
    inside = ((points[:, None, :] > prims.lo[None] + EPS) & (points[:, None, :] < prims.hi[None] - EPS)).all(axis=2)
    return inside.any(axis=1)


def floor_probes(grid: GridSpec) -> np.ndarray:
    probes = grid.centers().copy()
    probes[:, 2] += FLOOR_PROBE - grid.size / 2.0
    return probes


def coverage_mask(scene, viewport: Viewport, grid: GridSpec, cfg: SceneConfig | None = None) -> np.ndarray:
    """Coverage cells seen from ``viewport``: the center is visible and so is a
    probe just above the cell bottom, where small objects rest, unless that
    probe lies inside solid geometry."""
    seen = visible_mask(scene, viewport, grid, cfg)
    cache = scene.cache()
    key = ("floor_probes", grid)
    if key not in cache:
        probes = floor_probes(grid)
        cache[key] = (probes, inside_solid(scene, probes))
    probes, solid = cache[key]
    cand = np.nonzero(seen & ~solid)[0]
    if len(cand):
        seen[cand] = points_visible(scene, viewport, probes[cand], cfg)
    return seen


def visible_voxels(scene, viewport: Viewport, grid: GridSpec,
                   cfg: SceneConfig | None = None) -> set[tuple[int, int, int]]:
    mask = visible_mask(scene, viewport, grid, cfg)
    return {grid.unflat(int(i)) for i in np.nonzero(mask)[0]}
