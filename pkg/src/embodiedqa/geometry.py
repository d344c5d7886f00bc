"""Axis-aligned boxes and the distance helpers the relation rules are built on."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# all geometry snaps to 5 cm multiples, so comparisons only need to absorb
# float representation error
TOL = 1e-6


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self) -> None:
        if any(h < l - TOL for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"inverted box {self.lo} {self.hi}")

    @classmethod
    def from_center(cls, center, extent) -> "Box":
        lo = tuple(float(c - e / 2.0) for c, e in zip(center, extent))
        hi = tuple(float(c + e / 2.0) for c, e in zip(center, extent))
        return cls(lo, hi)

    @property
    def center(self) -> tuple[float, float, float]:
        return tuple((l + h) / 2.0 for l, h in zip(self.lo, self.hi))

    @property
    def extent(self) -> tuple[float, float, float]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def bottom(self) -> float:
        return self.lo[2]

    @property
    def top(self) -> float:
        return self.hi[2]

    @property
    def volume(self) -> float:
        ex = self.extent
        return ex[0] * ex[1] * ex[2]

    def translate(self, dx: float, dy: float, dz: float) -> "Box":
        d = (dx, dy, dz)
        return Box(tuple(l + v for l, v in zip(self.lo, d)), tuple(h + v for h, v in zip(self.hi, d)))

    def expand(self, margin: float) -> "Box":
        return Box(tuple(l - margin for l in self.lo), tuple(h + margin for h in self.hi))

    def move_face(self, axis: int, upper: bool, delta: float) -> "Box":
        """Move one face inward by ``delta`` (outward for negative delta)."""
        lo, hi = list(self.lo), list(self.hi)
        if upper:
            hi[axis] -= delta
        else:
            lo[axis] += delta
        if hi[axis] < lo[axis]:
            mid = (hi[axis] + lo[axis]) / 2.0
            lo[axis] = hi[axis] = mid
        return Box(tuple(lo), tuple(hi))

    def contains_point(self, p, strict: bool = False) -> bool:
        if strict:
            return all(l + TOL < v < h - TOL for l, v, h in zip(self.lo, p, self.hi))
        return all(l - TOL <= v <= h + TOL for l, v, h in zip(self.lo, p, self.hi))

    def inside(self, other: "Box") -> bool:
        return all(ol - TOL <= l and h <= oh + TOL
                   for l, h, ol, oh in zip(self.lo, self.hi, other.lo, other.hi))

    def as_array(self) -> np.ndarray:
        return np.array([self.lo, self.hi], dtype=float)

    def to_json(self) -> dict:
        return {"center": [round(c, 6) for c in self.center],
                "extent": [round(e, 6) for e in self.extent]}

    @classmethod
    def from_json(cls, data: dict) -> "Box":
        b = cls.from_center(data["center"], data["extent"])
        return cls(tuple(round(v, 9) for v in b.lo), tuple(round(v, 9) for v in b.hi))


def _gap(a_lo: float, a_hi: float, b_lo: float, b_hi: float) -> float:
    return max(0.0, b_lo - a_hi, a_lo - b_hi)


def box_distance(a: Box, b: Box) -> float:
    """Euclidean distance between two boxes (0 when they touch or overlap)."""
    return math.sqrt(sum(_gap(a.lo[i], a.hi[i], b.lo[i], b.hi[i]) ** 2 for i in range(3)))


def xy_distance(a: Box, b: Box) -> float:
    """Distance between the top-down footprints of two boxes."""
    return math.sqrt(sum(_gap(a.lo[i], a.hi[i], b.lo[i], b.hi[i]) ** 2 for i in range(2)))


def overlaps(a: Box, b: Box) -> bool:
    """Positive-volume intersection; touching faces do not count."""
    return all(a.lo[i] < b.hi[i] - TOL and b.lo[i] < a.hi[i] - TOL for i in range(3))


def xy_overlaps(a: Box, b: Box) -> bool:
    return all(a.lo[i] < b.hi[i] - TOL and b.lo[i] < a.hi[i] - TOL for i in range(2))


def point_box_distance(p, b: Box) -> float:
    return math.sqrt(sum(max(0.0, b.lo[i] - p[i], p[i] - b.hi[i]) ** 2 for i in range(3)))


def point_xy_distance(p, b: Box) -> float:
    return math.sqrt(sum(max(0.0, b.lo[i] - p[i], p[i] - b.hi[i]) ** 2 for i in range(2)))


def snap(value: float, quantum: float) -> float:
    return round(round(value / quantum) * quantum, 9)
