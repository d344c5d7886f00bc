"""Free-space lattice the agent moves on.

Positions live on the XY centers of the coverage grid; a cell is free when the
agent's disk placed at its center clears every obstacle footprint.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from ..geometry import Box


def disk_clear(x: float, y: float, blocks, room: Box, radius: float) -> bool:
    if (x - radius < room.lo[0] - 1e-9 or x + radius > room.hi[0] + 1e-9
            or y - radius < room.lo[1] - 1e-9 or y + radius > room.hi[1] + 1e-9):
        return False
    for b in blocks:
        dx = max(b.lo[0] - x, 0.0, x - b.hi[0])
        dy = max(b.lo[1] - y, 0.0, y - b.hi[1])
        if dx * dx + dy * dy < radius * radius - 1e-12:
            return False
    return True


def lattice_shape(room: Box, q: float) -> tuple[int, int]:
    return (int(round(room.extent[0] / q)), int(round(room.extent[1] / q)))


def cell_center(cell, q: float) -> tuple[float, float]:
    return ((cell[0] + 0.5) * q, (cell[1] + 0.5) * q)


def cell_of(x: float, y: float, q: float) -> tuple[int, int]:
    return (int(math.floor(x / q)), int(math.floor(y / q)))


def free_cells(room: Box, blocks, q: float, radius: float) -> np.ndarray:
    nx, ny = lattice_shape(room, q)
    free = np.zeros((nx, ny), dtype=bool)
    for i in range(nx):
        for j in range(ny):
            x, y = cell_center((i, j), q)
            free[i, j] = disk_clear(x, y, blocks, room, radius)
    return free


def connected_from(free: np.ndarray, start) -> np.ndarray:
    seen = np.zeros_like(free)
    if not free[start]:
        return seen
    seen[start] = True
    queue = deque([tuple(start)])
    while queue:
        i, j = queue.popleft()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < free.shape[0] and 0 <= b < free.shape[1] and free[a, b] and not seen[a, b]:
                seen[a, b] = True
                queue.append((a, b))
    return seen


def nearest_free(free: np.ndarray, point, q: float) -> tuple[int, int]:
    best, best_d = None, math.inf
    for i, j in zip(*np.nonzero(free)):
        x, y = cell_center((i, j), q)
        d = (x - point[0]) ** 2 + (y - point[1]) ** 2
        if d < best_d - 1e-12:
            best, best_d = (int(i), int(j)), d
    if best is None:
        raise ValueError("no free cell")
    return best
