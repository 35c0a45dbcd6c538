"""Curvature voting behaviors.

Each behavior scores a fixed fan of 40 candidate curvatures with
utilities in [-1, 1]; -1 is a hard veto that survives any weighting.
Curvature follows the heading-rate convention (kappa = d heading / d arc
length), so index 20 of the fan is exactly straight ahead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..geometry import Pose2, points_in_polygon, polyline_point_distances

N_CURVATURES = 40
KAPPA_MAX = 0.17
CURVATURES = (-KAPPA_MAX + np.arange(N_CURVATURES) * (2 * KAPPA_MAX / N_CURVATURES))
STRAIGHT_INDEX = 20  # CURVATURES[20] == 0.0

VETO = -1.0

BEHAVIOR_KINDS = ("follow_waypoints", "stay_in_lane", "avoid_obstacles",
                  "stay_on_roadway", "stay_in_zone")


@dataclass(frozen=True)
class CurvatureVote:
    behavior: str
    values: np.ndarray
    abstained: bool = False

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (N_CURVATURES,):
            raise ValueError(f"vote needs exactly {N_CURVATURES} entries")
        if (vals < VETO - 1e-12).any() or (vals > 1.0 + 1e-12).any():
            raise ValueError("vote utilities must lie in [-1, 1]")
        object.__setattr__(self, "values", vals)

    def vetoed(self) -> np.ndarray:
        return self.values <= VETO + 1e-12


def abstain(behavior: str) -> CurvatureVote:
    return CurvatureVote(behavior, np.zeros(N_CURVATURES), abstained=True)


@dataclass
class ObstacleView:
    """Contour plus velocity of one fused track, as seen by the planner."""

    contour: np.ndarray
    velocity: tuple[float, float] = (0.0, 0.0)


@dataclass
class VoteContext:
    """World snapshot a behavior may consult (missing entries -> abstain)."""

    point: Pose2
    speed: float = 0.0
    target: tuple[float, float] | None = None        # next route waypoint
    lane_centerline: np.ndarray | None = None        # (n, 2) world points
    obstacles: Sequence[ObstacleView] | None = None
    grid: object | None = None                       # RollingGrid
    zone: object | None = None                       # Polygon2
    a_comf: float = 2.0
    vehicle_halfwidth: float = 0.9
    margin: float = 0.3


@dataclass(frozen=True)
class VoteConfig:
    peak_width: float = 0.12          # triangular utility half-width (1/m)
    clearance_full: float = 3.0       # clearance that earns full utility
    sample_ds: float = 0.5
    min_horizon: float = 6.0
    roadway_horizon: float = 12.0
    zone_clearance_full: float = 5.0


def arc_points(pose: Pose2, kappas: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Sample points along constant-curvature arcs: shape (n_kappa, n_s, 2)."""
    k = np.asarray(kappas, dtype=float)[:, None]
    s = np.asarray(s, dtype=float)[None, :]
    psi = pose.heading
    straight = np.abs(k) < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        dx = np.where(straight, s * math.cos(psi),
                      (np.sin(psi + k * s) - math.sin(psi)) / np.where(straight, 1.0, k))
        dy = np.where(straight, s * math.sin(psi),
                      -(np.cos(psi + k * s) - math.cos(psi)) / np.where(straight, 1.0, k))
    return np.stack([pose.x + dx, pose.y + dy], axis=-1)


def advance_pose(pose: Pose2, kappa: float, ds: float = 1.0) -> Pose2:
    """Advance a pose by ``ds`` of arc length along curvature ``kappa``."""
    if abs(kappa) < 1e-12:
        return Pose2(pose.x + ds * math.cos(pose.heading),
                     pose.y + ds * math.sin(pose.heading), pose.heading)
    psi2 = pose.heading + kappa * ds
    return Pose2(pose.x + (math.sin(psi2) - math.sin(pose.heading)) / kappa,
                 pose.y - (math.cos(psi2) - math.cos(pose.heading)) / kappa,
                 psi2)


def curvature_through(pose: Pose2, target: Sequence[float]) -> float:
    """Curvature of the circular arc from the pose through the target point."""
    dx = target[0] - pose.x
    dy = target[1] - pose.y
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    d2 = lx * lx + ly * ly
    if d2 < 1e-9:
        return 0.0
    return 2.0 * ly / d2


def _peak_vote(behavior: str, kappa_star: float, cfg: VoteConfig) -> CurvatureVote:
    kappa_star = float(np.clip(kappa_star, -KAPPA_MAX, KAPPA_MAX))
    util = np.clip(1.0 - np.abs(CURVATURES - kappa_star) / cfg.peak_width, 0.0, 1.0)
    return CurvatureVote(behavior, util)


def _stop_distance(ctx: VoteContext, cfg: VoteConfig) -> float:
    return max(cfg.min_horizon, ctx.speed ** 2 / (2.0 * ctx.a_comf) + 4.0)


def vote_follow_waypoints(ctx: VoteContext, cfg: VoteConfig) -> CurvatureVote:
    if ctx.target is None:
        return abstain("follow_waypoints")
    return _peak_vote("follow_waypoints", curvature_through(ctx.point, ctx.target), cfg)


def vote_stay_in_lane(ctx: VoteContext, cfg: VoteConfig) -> CurvatureVote:
    line = ctx.lane_centerline
    if line is None or len(line) < 2:
        return abstain("stay_in_lane")
    lookahead = max(5.0, 1.2 * ctx.speed)
    # nearest centerline vertex, then target ahead of it
    d = np.hypot(line[:, 0] - ctx.point.x, line[:, 1] - ctx.point.y)
    i0 = int(np.argmin(d))
    seg = np.hypot(np.diff(line[:, 0]), np.diff(line[:, 1]))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    target_s = cum[i0] + lookahead
    i1 = int(np.searchsorted(cum, target_s))
    target = line[min(i1, len(line) - 1)]
    return _peak_vote("stay_in_lane", curvature_through(ctx.point, target), cfg)


def vote_avoid_obstacles(ctx: VoteContext, cfg: VoteConfig) -> CurvatureVote:
    if ctx.obstacles is None:
        return abstain("avoid_obstacles")
    horizon = _stop_distance(ctx, cfg)
    s = np.arange(cfg.sample_ds, horizon + 1e-9, cfg.sample_ds)
    pts = arc_points(ctx.point, CURVATURES, s)          # (40, n_s, 2)
    flat = pts.reshape(-1, 2)
    inflate = ctx.vehicle_halfwidth + ctx.margin
    clearance = np.full(len(flat), np.inf)
    for obs in ctx.obstacles:
        clearance = np.minimum(clearance,
                               polyline_point_distances(flat, obs.contour))
    clearance = clearance.reshape(len(CURVATURES), len(s))
    blocked = (clearance < inflate).any(axis=1)
    min_clear = clearance.min(axis=1)
    util = np.clip((min_clear - inflate) / cfg.clearance_full, 0.0, 1.0)
    util[blocked] = VETO
    return CurvatureVote("avoid_obstacles", util)


def vote_stay_on_roadway(ctx: VoteContext, cfg: VoteConfig) -> CurvatureVote:
    if ctx.grid is None:
        return abstain("stay_on_roadway")
    # look no farther than the stopping distance: a dead end ahead must not
    # veto plan points the vehicle can still safely roll up to
    horizon = ctx.speed ** 2 / (2.0 * ctx.a_comf) + 2.5
    horizon = min(cfg.roadway_horizon, max(2.5, horizon))
    s = np.arange(cfg.sample_ds, horizon + 1e-9, cfg.sample_ds)
    pts = arc_points(ctx.point, CURVATURES, s)
    d, u, n = ctx.grid.masses_at_points(pts.reshape(-1, 2))
    d = d.reshape(N_CURVATURES, len(s))
    u = u.reshape(N_CURVATURES, len(s))
    n = n.reshape(N_CURVATURES, len(s))
    undrivable = (u > d) & (u > n)
    # the veto applies to entering bad cells ahead, not to the cells the
    # vehicle is already straddling (it must be able to drive back out)
    escape = s <= 2.0
    undrivable[:, escape] = False
    util = np.clip(d.mean(axis=1), 0.0, 1.0)
    util[undrivable.any(axis=1)] = VETO
    return CurvatureVote("stay_on_roadway", util)


def vote_stay_in_zone(ctx: VoteContext, cfg: VoteConfig) -> CurvatureVote:
    if ctx.zone is None:
        return abstain("stay_in_zone")
    horizon = _stop_distance(ctx, cfg)
    s = np.arange(cfg.sample_ds, horizon + 1e-9, cfg.sample_ds)
    pts = arc_points(ctx.point, CURVATURES, s)
    flat = pts.reshape(-1, 2)
    inside = points_in_polygon(flat, ctx.zone).reshape(N_CURVATURES, len(s))
    ring = np.vstack([ctx.zone.as_array(), ctx.zone.as_array()[:1]])
    perim = polyline_point_distances(flat, ring).reshape(N_CURVATURES, len(s))
    util = np.clip(perim.min(axis=1) / cfg.zone_clearance_full, 0.0, 1.0)
    util[~inside.all(axis=1)] = VETO
    return CurvatureVote("stay_in_zone", util)


_BEHAVIOR_FNS = {
    "follow_waypoints": vote_follow_waypoints,
    "stay_in_lane": vote_stay_in_lane,
    "avoid_obstacles": vote_avoid_obstacles,
    "stay_on_roadway": vote_stay_on_roadway,
    "stay_in_zone": vote_stay_in_zone,
}


def vote(kind: str, ctx: VoteContext, cfg: VoteConfig | None = None) -> CurvatureVote:
    if kind not in _BEHAVIOR_FNS:
        raise ValueError(f"unknown behavior kind: {kind}")
    return _BEHAVIOR_FNS[kind](ctx, cfg or VoteConfig())
