"""Planar frames, poses and polygons shared by every subsystem.

The world frame is a local, planar, meters-based frame (x east, y north,
headings counter-clockwise from +x).  All value types here are immutable
and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def _require_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite coordinate: {v!r}")


@dataclass(frozen=True)
class Pose2:
    """A planar pose: position in meters plus a normalized heading."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self) -> None:
        _require_finite(self.x, self.y, self.heading)
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class EgoState:
    """Own-vehicle state as delivered by the (simulated) GPS/INS unit."""

    x: float
    y: float
    heading: float
    speed: float = 0.0
    acceleration: float = 0.0
    yaw_rate: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    height: float = 0.0
    t: float = 0.0

    def __post_init__(self) -> None:
        _require_finite(self.x, self.y, self.heading, self.speed,
                        self.acceleration, self.yaw_rate, self.roll,
                        self.pitch, self.height, self.t)
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    @property
    def pose(self) -> Pose2:
        return Pose2(self.x, self.y, self.heading)

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.speed * math.cos(self.heading),
                self.speed * math.sin(self.heading))


def ego_to_world(p_car: Sequence[float], ego: EgoState | Pose2) -> tuple[float, float]:
    """Rigid transform of a point from the vehicle frame to the world frame."""
    px, py = float(p_car[0]), float(p_car[1])
    _require_finite(px, py)
    c, s = math.cos(ego.heading), math.sin(ego.heading)
    return (ego.x + c * px - s * py, ego.y + s * px + c * py)


def world_to_ego(p_world: Sequence[float], ego: EgoState | Pose2) -> tuple[float, float]:
    """Exact inverse of :func:`ego_to_world`."""
    px, py = float(p_world[0]), float(p_world[1])
    _require_finite(px, py)
    dx, dy = px - ego.x, py - ego.y
    c, s = math.cos(ego.heading), math.sin(ego.heading)
    return (c * dx + s * dy, -s * dx + c * dy)


def ego_to_world_many(points: np.ndarray, ego: EgoState | Pose2) -> np.ndarray:
    """Vectorized :func:`ego_to_world` for an (n, 2) array."""
    pts = np.asarray(points, dtype=float)
    c, s = math.cos(ego.heading), math.sin(ego.heading)
    out = np.empty_like(pts)
    out[:, 0] = ego.x + c * pts[:, 0] - s * pts[:, 1]
    out[:, 1] = ego.y + s * pts[:, 0] + c * pts[:, 1]
    return out


def _on_segment(px: float, py: float, ax: float, ay: float,
                bx: float, by: float, eps: float = 1e-12) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if abs(cross) > eps * max(1.0, abs(bx - ax) + abs(by - ay)):
        return False
    dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay)
    if dot < -eps:
        return False
    sq = (bx - ax) ** 2 + (by - ay) ** 2
    return dot <= sq + eps


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-12:
            return 0
        return 1 if v > 0 else -1

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


@dataclass(frozen=True)
class Polygon2:
    """Simple (non-self-intersecting) polygon, vertices in meters."""

    vertices: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        for x, y in verts:
            _require_finite(x, y)
        n = len(verts)
        for i in range(n):
            a1, a2 = verts[i], verts[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                b1, b2 = verts[j], verts[(j + 1) % n]
                if _segments_properly_intersect(a1, a2, b1, b2):
                    raise ValueError("self-intersecting polygon")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "Polygon2":
        return cls(tuple((float(p[0]), float(p[1])) for p in points))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def centroid(self) -> tuple[float, float]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (sum(xs) / len(xs), sum(ys) / len(ys))

    def translated(self, dx: float, dy: float) -> "Polygon2":
        return Polygon2(tuple((x + dx, y + dy) for x, y in self.vertices))


def point_in_polygon(p: Sequence[float], poly: Polygon2) -> bool:
    """Even-odd containment test; boundary points count as inside."""
    px, py = float(p[0]), float(p[1])
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        if _on_segment(px, py, ax, ay, bx, by):
            return True
    inside = False
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        if (ay > py) != (by > py):
            t = (py - ay) / (by - ay)
            xint = ax + t * (bx - ax)
            if px < xint:
                inside = not inside
    return inside


def points_in_polygon(points: np.ndarray, poly: Polygon2) -> np.ndarray:
    """Vectorized even-odd test for an (n, 2) array (boundary inclusive)."""
    pts = np.asarray(points, dtype=float)
    verts = poly.as_array()
    n = len(verts)
    px, py = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    boundary = np.zeros(len(pts), dtype=bool)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay)
        sq = (bx - ax) ** 2 + (by - ay) ** 2
        scale = max(1.0, abs(bx - ax) + abs(by - ay))
        boundary |= (np.abs(cross) <= 1e-12 * scale) & (dot >= -1e-12) & (dot <= sq + 1e-12)
        cond = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (py - ay) / (by - ay)
            xint = ax + t * (bx - ax)
        inside ^= cond & (px < xint)
    return inside | boundary


def segment_point_distance(ax, ay, bx, by, px, py) -> float:
    """Distance from point (px, py) to segment (a, b)."""
    abx, aby = bx - ax, by - ay
    sq = abx * abx + aby * aby
    if sq <= 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * abx + (py - ay) * aby) / sq))
    return math.hypot(px - (ax + t * abx), py - (ay + t * aby))


def polyline_point_distances(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Min distance from each query point to an open polyline, vectorized.

    points: (n, 2); polyline: (m, 2) with m >= 1.
    """
    pts = np.asarray(points, dtype=float)
    line = np.asarray(polyline, dtype=float)
    if line.ndim == 1:
        line = line[None, :]
    if len(line) == 1:
        return np.hypot(pts[:, 0] - line[0, 0], pts[:, 1] - line[0, 1])
    a = line[:-1]            # (m-1, 2)
    ab = line[1:] - a        # (m-1, 2)
    sq = np.maximum((ab ** 2).sum(axis=1), 1e-300)
    diff = pts[:, None, :] - a[None, :, :]          # (n, m-1, 2)
    t = np.clip((diff * ab[None, :, :]).sum(axis=2) / sq[None, :], 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.hypot(pts[:, None, 0] - proj[:, :, 0], pts[:, None, 1] - proj[:, :, 1])
    return d.min(axis=1)
