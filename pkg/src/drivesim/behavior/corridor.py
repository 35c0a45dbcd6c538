"""Corridor planning: iterate vote-arbitrate-advance one meter at a time."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..geometry import EgoState, Pose2
from .arbiter import arbitrate_curvature, arbitrate_speed
from .interrupts import InterruptContext, InterruptManager
from .votes import (
    CURVATURES,
    ObstacleView,
    VoteConfig,
    VoteContext,
    advance_pose,
    vote,
)

DEFAULT_WEIGHTS = {
    "follow_waypoints": 1.0,
    "stay_in_lane": 2.0,
    "avoid_obstacles": 3.0,
    "stay_on_roadway": 2.0,
    "stay_in_zone": 3.0,
}


@dataclass(frozen=True)
class TrajectoryPoint:
    pose: Pose2
    speed: float
    kappa: float

    @property
    def x(self) -> float:
        return self.pose.x

    @property
    def y(self) -> float:
        return self.pose.y


@dataclass
class TrajectoryCorridor:
    points: list[TrajectoryPoint]
    stop_flag: bool = False
    interrupt: str | None = None
    seq: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "seq": self.seq,
            "points": [{"x": p.pose.x, "y": p.pose.y, "heading": p.pose.heading,
                        "kappa": p.kappa, "v": p.speed} for p in self.points],
            "stop_flag": self.stop_flag,
            "interrupt": self.interrupt,
        }, separators=(",", ":"))

    def arc_length(self) -> float:
        return float(len(self.points))  # 1 m spacing


@dataclass
class PlanContext:
    """Immutable world snapshot consumed by one planning cycle."""

    ego: EgoState
    waypoints: np.ndarray | None = None           # (n, 2) upcoming route points
    lane_centerline: np.ndarray | None = None
    obstacles: Sequence[ObstacleView] = ()
    grid: object | None = None
    zone: object | None = None
    speed_limits: dict = field(default_factory=lambda: {"rndf_max": 13.4})
    interrupts: InterruptContext = field(default_factory=InterruptContext)
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    a_comf: float = 2.0
    intersection_slow_radius: float = 15.0
    standoff: float = 6.0


@dataclass(frozen=True)
class PlanConfig:
    min_points: int = 20
    max_points: int = 60
    step: float = 1.0
    carrot_distance: float = 6.0
    vote_cfg: VoteConfig = field(default_factory=VoteConfig)


def _carrot(point: Pose2, waypoints: np.ndarray | None, min_dist: float):
    if waypoints is None or len(waypoints) == 0:
        return None
    d = np.hypot(waypoints[:, 0] - point.x, waypoints[:, 1] - point.y)
    ahead = np.flatnonzero(d >= min_dist)
    if len(ahead) == 0:
        return tuple(waypoints[-1])
    return tuple(waypoints[ahead[0]])


def _speed_proposals(point: Pose2, ctx: PlanContext) -> dict[str, float]:
    """Per-point max speeds; obstacle distance counts only blockers in path."""
    proposals = dict(ctx.speed_limits)
    if ctx.obstacles:
        c, s = math.cos(point.heading), math.sin(point.heading)
        ahead_min = math.inf
        for obs in ctx.obstacles:
            rel = obs.contour - (point.x, point.y)
            along = rel[:, 0] * c + rel[:, 1] * s
            lateral = -rel[:, 0] * s + rel[:, 1] * c
            in_path = (np.abs(lateral) < 2.2) & (along > 0.0) & (along < 60.0)
            if in_path.any():
                ahead_min = min(ahead_min, float(along[in_path].min()))
        if math.isfinite(ahead_min):
            headroom = max(0.0, ahead_min - ctx.standoff)
            proposals["obstacle_distance"] = math.sqrt(2.0 * ctx.a_comf * headroom)
    return proposals


def plan_corridor(ctx: PlanContext, manager: InterruptManager | None = None,
                  cfg: PlanConfig | None = None, seq: int = 0,
                  collect_votes: dict | None = None) -> TrajectoryCorridor:
    """Build the drivable corridor by following the best-voted curvature.

    Each iteration gathers votes at the current trajectory point, picks a
    curvature, advances the pose one meter along that arc and assigns the
    arbitrated speed; interrupts then shape the speeds for a smooth stop
    at the first claimed point.
    """
    cfg = cfg or PlanConfig()
    manager = manager or InterruptManager(a_comf=ctx.a_comf)
    pose = Pose2(ctx.ego.x, ctx.ego.y, ctx.ego.heading)
    v0 = max(ctx.ego.speed, 0.0)
    need = max(cfg.min_points, int(math.ceil(v0 * v0 / (2.0 * ctx.a_comf))) + 1)
    need = min(need, cfg.max_points)

    points: list[TrajectoryPoint] = []
    speeds: list[float] = []
    stop_flag = False
    stop_dists = [math.hypot(sp[0] - ctx.ego.x, sp[1] - ctx.ego.y)
                  for sp in ctx.interrupts.stop_points]
    near_intersection = any(d < ctx.intersection_slow_radius for d in stop_dists)

    for _ in range(need):
        vctx = VoteContext(
            point=pose, speed=v0,
            target=_carrot(pose, ctx.waypoints, cfg.carrot_distance),
            lane_centerline=ctx.lane_centerline,
            obstacles=list(ctx.obstacles) if ctx.obstacles is not None else None,
            grid=ctx.grid, zone=ctx.zone, a_comf=ctx.a_comf,
        )
        votes = []
        for kind, weight in ctx.weights.items():
            if kind == "stay_in_lane" and near_intersection:
                weight = weight * 0.5
            votes.append((vote(kind, vctx, cfg.vote_cfg), weight))
        result = arbitrate_curvature(votes)
        if collect_votes is not None and not points:
            # first-point vote fan, for the cockpit display
            collect_votes.update(
                curvatures=[float(k) for k in CURVATURES],
                combined=[float(v) for v in result.combined],
                behaviors={v.behavior: [float(x) for x in v.values]
                           for v, _ in votes},
            )
        if result.all_vetoed:
            stop_flag = True
            break
        pose = advance_pose(pose, result.kappa, cfg.step)
        v_max = arbitrate_speed(_speed_proposals(pose, ctx))
        points.append(TrajectoryPoint(pose=pose, speed=v_max, kappa=result.kappa))
        speeds.append(v_max)

    interrupt_name = None
    if not points:
        # totally vetoed at the start: stationary interrupts (pause, blocked
        # road) must still be able to claim the current position
        _, claimed = manager.check_corridor([pose], [0.0], ctx.interrupts)
        return TrajectoryCorridor(points=[], stop_flag=True,
                                  interrupt=claimed.kind if claimed else None,
                                  seq=seq)
    if points:
        speeds, claimed = manager.check_corridor([p.pose for p in points], speeds,
                                                 ctx.interrupts)
        if claimed is not None:
            interrupt_name = claimed.kind
            # arbiters are suspended beyond the claimed anchor: drop the tail
            # (a pause keeps its geometry so driving resumes along it)
            if claimed.kind != "pause":
                d_anchor = [math.hypot(p.pose.x - claimed.anchor.x,
                                       p.pose.y - claimed.anchor.y) for p in points]
                cut = min(len(points), int(np.argmin(d_anchor)) + 2)
                points = points[:cut]
                speeds = speeds[:cut]
        # forward pass from the current speed: never demand more than
        # comfortable acceleration along the chain
        v_prev = v0
        for i in range(len(speeds)):
            speeds[i] = min(speeds[i],
                            math.sqrt(v_prev ** 2 + 2.0 * ctx.a_comf * cfg.step))
            v_prev = speeds[i]
        points = [TrajectoryPoint(pose=p.pose, speed=s, kappa=p.kappa)
                  for p, s in zip(points, speeds)]
    if stop_flag:
        points = [TrajectoryPoint(pose=p.pose,
                                  speed=min(p.speed, math.sqrt(2.0 * ctx.a_comf
                                                               * max(0, len(points) - 1 - i))),
                                  kappa=p.kappa)
                  for i, p in enumerate(points)]
    return TrajectoryCorridor(points=points, stop_flag=stop_flag,
                              interrupt=interrupt_name, seq=seq)
