"""Post-step validators: pure observers over the world model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import Polygon2, points_in_polygon, polyline_point_distances
from .scenario import ValidatorSpec
from .world import WorldModel


@dataclass
class Verdict:
    name: str
    passed: bool
    measurement: float
    t: float
    note: str = ""


def polygon_distance(a: Polygon2, b: Polygon2) -> float:
    """Min distance between two polygon boundaries (0 when overlapping)."""
    pa = np.asarray(a.vertices + (a.vertices[0],), dtype=float)
    pb = np.asarray(b.vertices + (b.vertices[0],), dtype=float)
    d1 = polyline_point_distances(pa, pb).min()
    d2 = polyline_point_distances(pb, pa).min()
    if points_in_polygon(pa[:1], b)[0] or points_in_polygon(pb[:1], a)[0]:
        return 0.0
    return float(min(d1, d2))


def polygons_intersect(a: Polygon2, b: Polygon2) -> bool:
    pa = np.asarray(a.vertices, dtype=float)
    pb = np.asarray(b.vertices, dtype=float)
    if points_in_polygon(pa, b).any() or points_in_polygon(pb, a).any():
        return True
    return False


class Validator:
    """Called after every simulator step; must not mutate the world."""

    name = "validator"

    def __init__(self):
        self._ok = True
        self.failures: list[Verdict] = []

    def check(self, world: WorldModel, ctx: dict, t: float) -> Verdict:
        raise NotImplementedError

    def summary(self) -> bool:
        return self._ok

    def record(self, verdict: Verdict) -> Verdict:
        if not verdict.passed:
            self._ok = False
            self.failures.append(verdict)
        return verdict


class MinClearanceValidator(Validator):
    name = "min_clearance"

    def __init__(self, threshold: float):
        super().__init__()
        self.threshold = threshold
        self.min_seen = math.inf

    def check(self, world, ctx, t):
        ego_poly = world.ego().polygon_world()
        dmin = math.inf
        for obj in world.objects.values():
            if obj.kind == "ego":
                continue
            dmin = min(dmin, polygon_distance(ego_poly, obj.polygon_world()))
        if math.isinf(dmin):
            return self.record(Verdict(self.name, True, math.inf, t, "no obstacles"))
        self.min_seen = min(self.min_seen, dmin)
        return self.record(Verdict(self.name, dmin >= self.threshold, dmin, t))


class CollisionValidator(Validator):
    name = "collision"

    def check(self, world, ctx, t):
        ego_poly = world.ego().polygon_world()
        for obj in world.objects.values():
            if obj.kind == "ego":
                continue
            if polygons_intersect(ego_poly, obj.polygon_world()):
                return self.record(Verdict(self.name, False, 0.0, t,
                                           f"collision with object {obj.id}"))
        return self.record(Verdict(self.name, True, 1.0, t))


class LaneDepartureValidator(Validator):
    name = "lane_departure"

    def __init__(self, lanes, grace: float = 1.0, slack: float = 0.8):
        super().__init__()
        self.lanes = lanes          # list of (polyline, width)
        self.grace = grace
        self.slack = slack
        self._out_since: float | None = None

    def check(self, world, ctx, t):
        if ctx.get("in_zone"):
            self._out_since = None
            return self.record(Verdict(self.name, True, 0.0, t, "in zone"))
        ego = world.ego().position
        pt = np.asarray([[ego.x, ego.y]])
        best = math.inf
        for line, width in self.lanes:
            d = float(polyline_point_distances(pt, line)[0]) - width / 2.0
            best = min(best, d)
        inside = best <= self.slack
        if inside:
            self._out_since = None
            return self.record(Verdict(self.name, True, best, t))
        if self._out_since is None:
            self._out_since = t
        if t - self._out_since > self.grace:
            return self.record(Verdict(self.name, False, best, t,
                                       f"outside lanes for {t - self._out_since:.2f} s"))
        return self.record(Verdict(self.name, True, best, t, "within grace"))


class SpeedLimitValidator(Validator):
    name = "speed_limit"

    def __init__(self, tolerance: float = 1.0, grace: float = 0.5):
        super().__init__()
        self.tolerance = tolerance
        self.grace = grace
        self._over_since: float | None = None

    def check(self, world, ctx, t):
        v = abs(ctx.get("ego_speed", 0.0))
        limit = ctx.get("speed_limit", math.inf)
        if v <= limit + self.tolerance:
            self._over_since = None
            return self.record(Verdict(self.name, True, v, t))
        if self._over_since is None:
            self._over_since = t
        if t - self._over_since > self.grace:
            return self.record(Verdict(self.name, False, v, t,
                                       f"{v:.2f} m/s over limit {limit:.2f}"))
        return self.record(Verdict(self.name, True, v, t, "within hysteresis"))


class CheckpointCompletionValidator(Validator):
    name = "checkpoint_completion"

    def __init__(self, expected: list[int]):
        super().__init__()
        self.expected = expected

    def check(self, world, ctx, t):
        visited = ctx.get("visited_checkpoints", [])
        frac = len([c for c in self.expected if c in visited]) / max(1, len(self.expected))
        # only binding at mission end; progress is informational
        if ctx.get("mission_ended", False):
            return self.record(Verdict(self.name, frac >= 1.0, frac, t))
        return self.record(Verdict(self.name, True, frac, t))


class TimeoutValidator(Validator):
    name = "timeout"

    def __init__(self, limit: float):
        super().__init__()
        self.limit = limit

    def check(self, world, ctx, t):
        return self.record(Verdict(self.name, t <= self.limit, t, ""))


def build_validators(specs: list[ValidatorSpec], lanes, expected_checkpoints,
                     duration: float) -> list[Validator]:
    out: list[Validator] = []
    for spec in specs:
        if spec.kind == "min_clearance":
            out.append(MinClearanceValidator(threshold=spec.threshold or 0.5))
        elif spec.kind == "collision":
            out.append(CollisionValidator())
        elif spec.kind == "lane_departure":
            out.append(LaneDepartureValidator(lanes, grace=spec.grace or 1.0))
        elif spec.kind == "speed_limit":
            out.append(SpeedLimitValidator(tolerance=spec.tolerance or 1.0,
                                           grace=spec.grace or 0.5))
        elif spec.kind == "checkpoint_completion":
            out.append(CheckpointCompletionValidator(expected_checkpoints))
        elif spec.kind == "timeout":
            out.append(TimeoutValidator(limit=spec.limit or duration))
    return out


def run_validators(world: WorldModel, validators: list[Validator],
                   ctx: dict, t: float) -> list[Verdict]:
    """Run every validator post-step; the run summary is their conjunction."""
    return [v.check(world, ctx, t) for v in validators]
