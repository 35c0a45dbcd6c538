"""World model: simulator objects, motion behaviors, two-phase stepping.

Behaviors read the pre-step snapshot of all object positions and write
staged updates; the world commits them atomically, so the step result is
independent of object iteration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import EgoState, Polygon2, Pose2, normalize_angle
from ..behavior import TrajectoryCorridor
from ..control import (
    BicycleState,
    EngineMap,
    LateralCtrlState,
    LongitudinalCtrlState,
    LongitudinalPlantState,
    VehicleParams,
    corridor_tracking_error,
    lateral_step,
    longitudinal_step,
    simulate_bicycle_plant,
    simulate_longitudinal_plant,
    speed_governor,
)
from .rndf import RNDF


@dataclass(frozen=True)
class ObjectPosition:
    x: float
    y: float
    heading: float

    @property
    def pose(self) -> Pose2:
        return Pose2(self.x, self.y, self.heading)


def rectangle(length: float, width: float) -> Polygon2:
    hl, hw = length / 2.0, width / 2.0
    return Polygon2(((-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)))


class MotionBehavior:
    """One object's motion: reads the snapshot, returns its next position."""

    def step(self, dt: float, snapshot: dict[int, ObjectPosition],
             obj: "SimulatorObject") -> ObjectPosition:
        raise NotImplementedError

    def velocity(self) -> tuple[float, float]:
        return (0.0, 0.0)


@dataclass
class SimulatorObject:
    id: int
    kind: str                       # ego | vehicle | static_obstacle | pedestrian
    shape: Polygon2                 # body frame
    position: ObjectPosition
    behavior: MotionBehavior | None = None

    def __post_init__(self) -> None:
        if self.kind != "static_obstacle" and self.behavior is None:
            raise ValueError(f"non-static object {self.id} needs a behavior")

    def polygon_world(self) -> Polygon2:
        c, s = math.cos(self.position.heading), math.sin(self.position.heading)
        pts = [(self.position.x + c * x - s * y, self.position.y + s * x + c * y)
               for x, y in self.shape.vertices]
        return Polygon2.from_points(pts)

    def velocity(self) -> tuple[float, float]:
        return self.behavior.velocity() if self.behavior else (0.0, 0.0)


class WorldModel:
    def __init__(self):
        self.objects: dict[int, SimulatorObject] = {}
        self.t: float = 0.0
        self._next_id = 1

    def add(self, obj: SimulatorObject) -> int:
        if obj.id in self.objects:
            raise ValueError(f"duplicate object id {obj.id}")
        if obj.kind == "ego" and any(o.kind == "ego" for o in self.objects.values()):
            raise ValueError("exactly one ego per world")
        self.objects[obj.id] = obj
        self._next_id = max(self._next_id, obj.id + 1)
        return obj.id

    def allocate_id(self) -> int:
        self._next_id += 1
        return self._next_id - 1

    def remove(self, object_id: int) -> None:
        if object_id not in self.objects:
            raise KeyError(f"no object {object_id}")
        del self.objects[object_id]

    def ego(self) -> SimulatorObject:
        for obj in self.objects.values():
            if obj.kind == "ego":
                return obj
        raise LookupError("world has no ego")

    def snapshot(self) -> dict[int, ObjectPosition]:
        return {oid: obj.position for oid, obj in self.objects.items()}

    def position_hash(self) -> tuple:
        return tuple((oid, obj.position.x, obj.position.y, obj.position.heading)
                     for oid, obj in sorted(self.objects.items()))

    def step(self, dt: float) -> None:
        if dt <= 0:
            raise ValueError("dt must be positive")
        snapshot = self.snapshot()
        staged: dict[int, ObjectPosition] = {}
        for oid in sorted(self.objects):
            obj = self.objects[oid]
            if obj.behavior is not None:
                staged[oid] = obj.behavior.step(dt, snapshot, obj)
        for oid, pos in staged.items():
            self.objects[oid].position = pos
        self.t += dt


def step_world(world: WorldModel, dt: float) -> WorldModel:
    world.step(dt)
    return world


# ----------------------------------------------------------------- B-spline

def bspline_resample(points: np.ndarray, samples_per_span: int = 4) -> np.ndarray:
    """Smooth a polyline with a clamped uniform cubic B-spline."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        return pts.copy()
    ctrl = np.vstack([pts[0], pts[0], pts, pts[-1], pts[-1]])
    out = []
    n_spans = len(ctrl) - 3
    for i in range(n_spans):
        p0, p1, p2, p3 = ctrl[i], ctrl[i + 1], ctrl[i + 2], ctrl[i + 3]
        for k in range(samples_per_span):
            t = k / samples_per_span
            t2, t3 = t * t, t * t * t
            b0 = (1 - 3 * t + 3 * t2 - t3) / 6.0
            b1 = (4 - 6 * t2 + 3 * t3) / 6.0
            b2 = (1 + 3 * t + 3 * t2 - 3 * t3) / 6.0
            b3 = t3 / 6.0
            out.append(b0 * p0 + b1 * p1 + b2 * p2 + b3 * p3)
    out.append(pts[-1])
    return np.asarray(out)


# ---------------------------------------------------------------- behaviors

class MotionBehaviorByTrajectory(MotionBehavior):
    """Drives the ego along the planned corridor via the vehicle controllers.

    The corridor's pearl chain is smoothed with a 3rd-order B-spline and
    tracked by the lateral controller; the longitudinal cascade follows
    the corridor speeds.  An e-stop engages full braking while steering
    keeps holding the course.
    """

    def __init__(self, params: VehicleParams | None = None, v0: float = 0.0):
        self.params = params or VehicleParams()
        self.lat_ctrl = LateralCtrlState()
        self.lon_ctrl = LongitudinalCtrlState()
        self.engine_map = EngineMap(self.params)
        self.bicycle = BicycleState()
        self.plant = LongitudinalPlantState(v=v0)
        self.corridor: TrajectoryCorridor | None = None
        self.mode: str = "corridor"         # corridor | hold | direct
        self.direct_v: float = 0.0
        self.direct_kappa: float = 0.0
        self.gear: str = "forward"
        self.estop: bool = False
        self._spline: np.ndarray | None = None
        self._spline_meta: tuple | None = None
        self.last_command = None
        self.last_v_set = 0.0
        self.last_d = 0.0
        self.last_psi_rel = 0.0

    def set_corridor(self, corridor: TrajectoryCorridor) -> None:
        self.corridor = corridor
        if corridor.points and len(corridor.points) >= 3:
            raw = np.array([[p.pose.x, p.pose.y] for p in corridor.points])
            smooth = bspline_resample(raw, samples_per_span=4)
            headings = np.arctan2(np.gradient(smooth[:, 1]), np.gradient(smooth[:, 0]))
            dheading = np.diff(headings)
            dheading = (dheading + math.pi) % (2 * math.pi) - math.pi
            seg = np.hypot(np.diff(smooth[:, 0]), np.diff(smooth[:, 1]))
            kappa = np.concatenate([[0.0], dheading / np.maximum(seg, 1e-9)])
            # corridor speeds interpolated over the resampled chain
            s_raw = np.arange(len(raw), dtype=float)
            s_new = np.linspace(0, len(raw) - 1, len(smooth))
            speeds = np.interp(s_new, s_raw, [p.speed for p in corridor.points])
            self._spline = smooth
            self._spline_meta = (headings, kappa, speeds)
        else:
            self._spline = None
            self._spline_meta = None

    def set_directive(self, mode: str, v_set: float = 0.0, kappa: float = 0.0,
                      gear: str = "forward") -> None:
        self.mode = mode
        self.direct_v = v_set
        self.direct_kappa = kappa
        self.gear = gear

    def ego_state(self, t: float = 0.0) -> EgoState:
        direction = -1.0 if self.gear == "reverse" else 1.0
        return EgoState(self.bicycle.x, self.bicycle.y, self.bicycle.psi,
                        speed=direction * self.plant.v, acceleration=self.plant.a,
                        yaw_rate=self.bicycle.yaw_rate, t=t)

    def velocity(self) -> tuple[float, float]:
        direction = -1.0 if self.gear == "reverse" else 1.0
        v = direction * self.plant.v
        return (v * math.cos(self.bicycle.psi), v * math.sin(self.bicycle.psi))

    def step(self, dt, snapshot, obj) -> ObjectPosition:
        ego = self.ego_state()
        if self.mode == "direct" and not self.estop:
            v_set = self.direct_v
            delta = self.params.steady_state_steer(self.direct_kappa, self.plant.v)
            gear = self.gear
        elif self.mode == "hold" or self.estop or self._spline is None:
            v_set = 0.0
            gear = "forward"
            if self._spline is not None and not self.estop:
                delta = self._lateral(ego, dt)
            else:
                delta = self.lat_ctrl.delta_cmd     # hold course
        else:
            headings, kappa, speeds = self._spline_meta
            # preview the speed reference so acceleration actually builds
            err = corridor_tracking_error(self._spline, headings, kappa, speeds,
                                          Pose2(ego.x, ego.y, ego.heading),
                                          preview_s=abs(ego.speed) * 1.0 + 1.0)
            v_set = max(err.v_ref, err.v_ref_preview)
            # braking governor: never ride above the deceleration curve into
            # slower reference speeds (stops, curves) ahead
            v_set = min(v_set, self._governed_speed(ego))
            self.last_d = err.d
            self.last_psi_rel = err.psi_rel
            delta = self._lateral(ego, dt)
            gear = "forward"
        if self.plant.v < 0.3 and self.mode != "direct":
            delta = self.lat_ctrl.delta_cmd   # no heading authority at crawl
        self.last_v_set = v_set
        cmd = longitudinal_step(v_set, ego, dt, self.lon_ctrl,
                                feedforward=self.engine_map, gear=gear)
        if self.estop:
            cmd = replace(cmd, throttle=0.0, brake=1.0)
        self.last_command = cmd
        self.plant = simulate_longitudinal_plant(self.plant, cmd.throttle, cmd.brake,
                                                 dt, self.params, gear=gear)
        self.bicycle = simulate_bicycle_plant(self.bicycle, delta, self.plant.v,
                                              dt, self.params, gear=gear)
        return ObjectPosition(self.bicycle.x, self.bicycle.y, self.bicycle.psi)

    def _governed_speed(self, ego: EgoState) -> float:
        """Braking-governor limit from the reference speeds ahead."""
        if self._spline is None:
            return 0.0
        _, _, speeds = self._spline_meta
        d = np.hypot(self._spline[:, 0] - ego.x, self._spline[:, 1] - ego.y)
        i0 = int(np.argmin(d))
        seg = np.hypot(np.diff(self._spline[:, 0]), np.diff(self._spline[:, 1]))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return speed_governor(cum, speeds, float(cum[i0]), abs(ego.speed))

    def _lateral(self, ego: EgoState, dt: float) -> float:
        headings, kappa, speeds = self._spline_meta
        from types import SimpleNamespace

        pts = [SimpleNamespace(pose=Pose2(x, y, h), kappa=k, speed=v)
               for (x, y), h, k, v in zip(self._spline, headings, kappa, speeds)]
        return lateral_step(SimpleNamespace(points=pts), ego, dt,
                            self.lat_ctrl, self.params)


class MotionBehaviorByRNDF(MotionBehavior):
    """Follows a private RNDF polyline at a set speed (arc-length driven)."""

    def __init__(self, rndf: RNDF, speed: float, start_offset: float = 0.0,
                 loop: bool = True):
        polyline: list[tuple[float, float]] = []
        for key in sorted(rndf.lanes):
            polyline.extend((w.x, w.y) for w in rndf.lanes[key].waypoints)
        if len(polyline) < 2:
            raise ValueError("RNDF behavior needs at least two waypoints")
        self.path = np.asarray(polyline, dtype=float)
        seg = np.hypot(np.diff(self.path[:, 0]), np.diff(self.path[:, 1]))
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.total = float(self.cum[-1])
        self.speed = speed
        self.loop = loop
        self.s = min(start_offset, self.total)
        self._heading = 0.0

    def pose_at(self, s: float) -> ObjectPosition:
        if self.loop:
            s = s % self.total
        s = min(max(s, 0.0), self.total - 1e-9)
        i = int(np.searchsorted(self.cum, s, side="right") - 1)
        i = min(i, len(self.path) - 2)
        seg_len = self.cum[i + 1] - self.cum[i]
        t = (s - self.cum[i]) / max(seg_len, 1e-12)
        a, b = self.path[i], self.path[i + 1]
        heading = math.atan2(b[1] - a[1], b[0] - a[0])
        return ObjectPosition(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]),
                              heading)

    def step(self, dt, snapshot, obj) -> ObjectPosition:
        self.s += self.speed * dt
        if not self.loop:
            self.s = min(self.s, self.total)
        pos = self.pose_at(self.s)
        self._heading = pos.heading
        return pos

    def velocity(self) -> tuple[float, float]:
        if not self.loop and self.s >= self.total:
            return (0.0, 0.0)
        return (self.speed * math.cos(self._heading),
                self.speed * math.sin(self._heading))


class MotionBehaviorByKeyboard(MotionBehavior):
    """Velocity/steer commands from the cockpit stream (kinematic bicycle)."""

    def __init__(self, wheelbase: float = 2.7, v_max: float = 15.0,
                 kappa_max: float = 0.17):
        self.wheelbase = wheelbase
        self.v_max = v_max
        self.kappa_max = kappa_max
        self.v = 0.0
        self.kappa = 0.0
        self._heading = 0.0

    def command(self, action: str) -> None:
        if action == "accel":
            self.v = min(self.v + 1.0, self.v_max)
        elif action == "brake":
            self.v = max(self.v - 1.0, 0.0)
        elif action == "left":
            self.kappa = min(self.kappa + 0.017, self.kappa_max)
        elif action == "right":
            self.kappa = max(self.kappa - 0.017, -self.kappa_max)
        elif action == "straight":
            self.kappa = 0.0
        else:
            raise ValueError(f"unknown steer action {action!r}")

    def step(self, dt, snapshot, obj) -> ObjectPosition:
        heading = normalize_angle(obj.position.heading + self.v * self.kappa * dt)
        x = obj.position.x + self.v * math.cos(heading) * dt
        y = obj.position.y + self.v * math.sin(heading) * dt
        self._heading = heading
        return ObjectPosition(x, y, heading)

    def velocity(self) -> tuple[float, float]:
        return (self.v * math.cos(self._heading), self.v * math.sin(self._heading))


class TrailerBehavior(MotionBehavior):
    """Composed motion: this object trails a leader at a fixed hitch length."""

    def __init__(self, leader_id: int, hitch: float = 3.0):
        self.leader_id = leader_id
        self.hitch = hitch
        self._velocity = (0.0, 0.0)

    def step(self, dt, snapshot, obj) -> ObjectPosition:
        leader = snapshot[self.leader_id]
        dx = leader.x - obj.position.x
        dy = leader.y - obj.position.y
        heading = math.atan2(dy, dx)
        x = leader.x - self.hitch * math.cos(heading)
        y = leader.y - self.hitch * math.sin(heading)
        self._velocity = ((x - obj.position.x) / dt, (y - obj.position.y) / dt)
        return ObjectPosition(x, y, heading)

    def velocity(self) -> tuple[float, float]:
        return self._velocity
