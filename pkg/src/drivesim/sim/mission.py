"""Headless mission execution: the full pipeline loop over the simulator.

Physics and control run every tick (default 0.02 s); fusion and grid at
20 Hz; vision and behavior at 10 Hz.  A watchdog supervises the stages
and restarts failed ones (with their dependents) in dependency order;
silence of the slave watchdog escalates to an emergency stop.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..behavior import (
    InterruptContext,
    InterruptManager,
    ObstacleView,
    PlanContext,
    plan_corridor,
)
from ..fusion import (
    FusionConfig,
    FusionPipeline,
    SensorKind,
    apply_deltas,
    track_payload,
)
from ..geometry import EgoState, Polygon2, polyline_point_distances
from ..grid import GradientMassConfig, Region, RollingGrid
from .clock import SimClock
from .rndf import RNDF, parse_rndf, serialize_rndf
from .route import Route, RouteError, nearest_waypoint
from .scenario import Scenario
from .sensors import GpsDrift, synthesize_sensors, terrain_rays
from .validators import Verdict, build_validators, run_validators
from .watchdog import StageSpec, Watchdog
from .world import (
    MotionBehaviorByKeyboard,
    MotionBehaviorByRNDF,
    MotionBehaviorByTrajectory,
    ObjectPosition,
    SimulatorObject,
    WorldModel,
    rectangle,
)

FRONT_KINDS = (SensorKind.LASERFront, SensorKind.LIDARFront, SensorKind.RADARFront)

STAGE_SPECS = [
    StageSpec("fusion", 0.05),
    StageSpec("grid", 0.05),
    StageSpec("vision", 0.1),
    StageSpec("behavior", 0.1, deps=("fusion", "grid", "vision")),
    StageSpec("control", 0.02, deps=("behavior",)),
]


@dataclass
class TraceRow:
    t: float
    x: float
    y: float
    heading: float
    v: float
    v_set: float
    a_req: float
    throttle: float
    brake: float
    delta_cmd: float
    d: float
    psi_rel: float
    clearance: float
    interrupt: str

    HEADER = ("t,x,y,heading,v,v_set,a_req,throttle,brake,delta_cmd,"
              "d,psi_rel,clearance,interrupt")

    def csv(self) -> str:
        return (f"{self.t:.6f},{self.x:.6f},{self.y:.6f},{self.heading:.6f},"
                f"{self.v:.6f},{self.v_set:.6f},{self.a_req:.6f},"
                f"{self.throttle:.6f},{self.brake:.6f},{self.delta_cmd:.6f},"
                f"{self.d:.6f},{self.psi_rel:.6f},{self.clearance:.6f},"
                f"{self.interrupt}")


def road_strips(rndf: RNDF) -> list[tuple[np.ndarray, float]]:
    """Lane corridors plus exit connections, as (polyline, width) strips."""
    strips = [(lane.polyline(), lane.width) for lane in rndf.lanes.values()]
    for src, dst in rndf.exits:
        a = rndf.waypoint(src)
        b = rndf.waypoint(dst)
        width = min(rndf.lanes[f"{src[0]}.{src[1]}"].width,
                    rndf.lanes[f"{dst[0]}.{dst[1]}"].width)
        strips.append((np.asarray([[a.x, a.y], [b.x, b.y]], dtype=float), width))
    return strips


class RoadMask:
    """Static drivability of the road network, rasterized once per mission.

    ``shoulder`` widens the painted strips a little: the appearance-based
    drivability extends slightly past the lane edge even though the curb
    geometry (gradient path) stays exact.
    """

    def __init__(self, rndf: RNDF, cell: float = 0.25, margin: float = 10.0,
                 shoulder: float = 1.5):
        lanes = [(line, width + 2.0 * shoulder) for line, width in road_strips(rndf)]
        zones = [z.polygon() for z in rndf.zones.values()]
        pts = np.vstack([line for line, _ in lanes]) if lanes else np.zeros((1, 2))
        lo = pts.min(axis=0) - margin
        hi = pts.max(axis=0) + margin
        self.cell = cell
        self.i0 = int(math.floor(lo[0] / cell))
        self.j0 = int(math.floor(lo[1] / cell))
        ni = int(math.ceil((hi[0] - lo[0]) / cell)) + 1
        nj = int(math.ceil((hi[1] - lo[1]) / cell)) + 1
        ii, jj = np.meshgrid(np.arange(ni), np.arange(nj), indexing="ij")
        centers = np.stack([(ii.ravel() + self.i0 + 0.5) * cell,
                            (jj.ravel() + self.j0 + 0.5) * cell], axis=1)
        mask = np.zeros(len(centers), dtype=bool)
        for line, width in lanes:
            mask |= polyline_point_distances(centers, line) <= width / 2.0
        for zone in zones:
            from ..geometry import points_in_polygon

            mask |= points_in_polygon(centers, zone)
        self.mask = mask.reshape(ni, nj)

    def drivable(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        ii = np.clip(i - self.i0, 0, self.mask.shape[0] - 1)
        jj = np.clip(j - self.j0, 0, self.mask.shape[1] - 1)
        inside = ((i >= self.i0) & (i < self.i0 + self.mask.shape[0])
                  & (j >= self.j0) & (j < self.j0 + self.mask.shape[1]))
        return np.where(inside, self.mask[ii, jj], False)


class MissionRunner:
    EGO_ID = 1

    def __init__(self, scenario: Scenario, on_state=None):
        self.scenario = scenario
        self.on_state = on_state
        self.rndf = scenario.load_rndf()
        self.lane_rndf = scenario.load_lane_rndf() or self.rndf
        self.clock = SimClock(dt=scenario.dt)
        seq = np.random.SeedSequence(scenario.seed)
        kids = seq.spawn(3)
        self.rng_sensors = np.random.default_rng(kids[0])
        self.rng_ransac = np.random.default_rng(kids[1])
        self.rng_misc = np.random.default_rng(kids[2])
        self.gps_drift = GpsDrift(scenario.noise.gps_drift_sigma, self.rng_misc)

        # world
        self.world = WorldModel()
        ego_spec = scenario.ego
        self.ego_behavior = MotionBehaviorByTrajectory(v0=ego_spec.speed)
        self.ego_behavior.bicycle.x = ego_spec.x
        self.ego_behavior.bicycle.y = ego_spec.y
        self.ego_behavior.bicycle.psi = ego_spec.heading
        self.world.add(SimulatorObject(
            id=self.EGO_ID, kind="ego",
            shape=rectangle(ego_spec.length, ego_spec.width),
            position=ObjectPosition(ego_spec.x, ego_spec.y, ego_spec.heading),
            behavior=self.ego_behavior))
        next_id = 50
        for spec in scenario.vehicles:
            if spec.behavior == "rndf":
                rndf = parse_rndf((scenario.base_dir / spec.rndf).read_text())
                behavior = MotionBehaviorByRNDF(rndf, spec.speed, spec.start_offset,
                                                loop=spec.loop)
                pos = behavior.pose_at(behavior.s)
            else:
                behavior = MotionBehaviorByKeyboard()
                pos = ObjectPosition(ego_spec.x - 10.0, ego_spec.y, ego_spec.heading)
            self.world.add(SimulatorObject(
                id=next_id, kind="vehicle",
                shape=rectangle(spec.length, spec.width),
                position=pos, behavior=behavior))
            next_id += 1
        next_id = 100
        for poly in scenario.obstacle_polygons():
            cx, cy = poly.centroid()
            local = Polygon2(tuple((x - cx, y - cy) for x, y in poly.vertices))
            self.world.add(SimulatorObject(
                id=next_id, kind="static_obstacle", shape=local,
                position=ObjectPosition(cx, cy, 0.0), behavior=None))
            next_id += 1

        # mission state
        self.route = Route.plan(self.rndf, scenario.mdf,
                                (ego_spec.x, ego_spec.y), ego_spec.heading)
        self.checkpoint_times: dict[int, float] = {}
        self.paused = False
        self.estop = False
        self.aborted = False
        self.abort_reason = ""
        self.completed = False
        self.pending_commands: list[dict] = []
        self.command_log: list[dict] = []

        # pipeline stages
        self.fusion_cfg = FusionConfig(default_activation=2)
        self.front_pipeline = FusionPipeline(self.fusion_cfg, name="front", id_start=1000)
        self.rear_pipeline = FusionPipeline(self.fusion_cfg, name="rear", id_start=2000)
        self.client_tracks: dict[int, dict] = {}
        self.grid = RollingGrid(cell_size=0.25, extent=400, sub=16)
        self.grid_cfg = GradientMassConfig()
        self.road_mask = RoadMask(self.rndf) if scenario.grid_enabled else None
        self.interrupts = InterruptManager()
        self.corridor = None
        self.block_counter = 0
        self.road_blocked_flag = False
        self.u_turn_replan_pending = False
        self.lane_lines = road_strips(self.lane_rndf)
        self.validators = build_validators(
            scenario.validators, self.lane_lines,
            scenario.mdf.checkpoints, scenario.duration)
        self.watchdog = Watchdog(STAGE_SPECS)
        self.active_faults: list = list(scenario.faults)
        self.trace: list[TraceRow] = []
        self.failures: list[Verdict] = []
        self._last_state_emit = -1.0
        self._stage_last_run = {s.name: -math.inf for s in STAGE_SPECS}
        self._last_verdicts: list[Verdict] = []
        self.last_votes: dict = {}

    # ------------------------------------------------------------ commands

    def submit_command(self, cmd: dict) -> None:
        self.pending_commands.append(cmd)

    def _apply_command(self, cmd: dict) -> dict:
        name = cmd.get("name")
        try:
            if name == "PAUSE":
                self.paused = True
                return {"ok": True}
            if name == "RUN":
                self.paused = False
                self.estop = False
                self.ego_behavior.estop = False
                return {"ok": True}
            if name == "ESTOP":
                self.estop = True
                self.ego_behavior.estop = True
                self.paused = True
                return {"ok": True}
            if name == "place_obstacle":
                poly = Polygon2.from_points(cmd["polygon"])
                cx, cy = poly.centroid()
                local = Polygon2(tuple((x - cx, y - cy) for x, y in poly.vertices))
                oid = self.world.allocate_id() + 500
                while oid in self.world.objects:
                    oid += 1
                self.world.add(SimulatorObject(
                    id=oid, kind="static_obstacle", shape=local,
                    position=ObjectPosition(cx, cy, 0.0), behavior=None))
                return {"ok": True, "id": oid}
            if name == "remove_obstacle":
                self.world.remove(int(cmd["id"]))
                return {"ok": True}
            if name == "steer":
                for obj in self.world.objects.values():
                    if isinstance(obj.behavior, MotionBehaviorByKeyboard):
                        obj.behavior.command(cmd["action"])
                        return {"ok": True}
                return {"ok": False, "error": "no keyboard-controlled object"}
            if name == "edit_rndf":
                return self._apply_rndf_patch(cmd.get("ops", []))
            return {"ok": False, "error": f"unknown command {name!r}"}
        except (KeyError, ValueError, TypeError) as e:
            return {"ok": False, "error": str(e)}

    def _apply_rndf_patch(self, ops: list[dict]) -> dict:
        text = serialize_rndf(self.rndf)
        candidate = parse_rndf(text)
        try:
            for op in ops:
                kind = op.get("op")
                if kind == "move_waypoint":
                    wid = tuple(int(p) for p in str(op["id"]).split("."))
                    w = candidate.waypoint(wid)   # raises KeyError when missing
                    w.x = float(op["x"])
                    w.y = float(op["y"])
                elif kind == "add_stop":
                    wid = tuple(int(p) for p in str(op["id"]).split("."))
                    candidate.waypoint(wid).is_stop = True
                elif kind == "add_exit":
                    src = tuple(int(p) for p in str(op["from"]).split("."))
                    dst = tuple(int(p) for p in str(op["to"]).split("."))
                    candidate.waypoint(src)
                    candidate.waypoint(dst)
                    candidate.exits.append((src, dst))
                else:
                    return {"ok": False, "error": f"unknown rndf op {kind!r}"}
            reparsed = parse_rndf(serialize_rndf(candidate))
        except (KeyError, ValueError) as e:
            return {"ok": False, "error": f"rndf patch rejected: {e}"}
        self.rndf = reparsed
        ego = self.ego_state()
        try:
            self.route = self.route.replan_from(ego.x, ego.y, ego.heading)
            self.route.rndf = reparsed
        except RouteError as e:
            return {"ok": False, "error": f"rndf patch breaks the route: {e}"}
        if self.road_mask is not None:
            self.road_mask = RoadMask(self.rndf)
        return {"ok": True}

    # --------------------------------------------------------------- state

    def ego_state(self) -> EgoState:
        return self.ego_behavior.ego_state(self.clock.now)

    def sensed_ego_state(self) -> EgoState:
        return self.gps_drift.apply(self.ego_state())

    def _fault_active(self, stage: str, t: float) -> bool:
        for f in self.active_faults:
            if f.kind == "silence" and f.stage == stage and f.at <= t:
                return True
        return False

    def _slave_fault_active(self, t: float) -> bool:
        return any(f.kind == "slave_silence" and f.at <= t <= f.at + f.duration
                   for f in self.active_faults)

    def _clear_faults(self, stages: list[str]) -> None:
        self.active_faults = [
            f for f in self.active_faults
            if not (f.kind == "silence" and f.stage in stages
                    and f.at <= self.clock.now)]

    def _due(self, stage: str, interval: float) -> bool:
        t = self.clock.now
        if t - self._stage_last_run[stage] + 1e-9 >= interval:
            self._stage_last_run[stage] = t
            return True
        return False

    # -------------------------------------------------------------- stages

    def _run_fusion(self, t: float) -> None:
        readings = synthesize_sensors(self.world, self.sensed_ego_state(),
                                      self.scenario.noise, self.rng_sensors, t)
        for obj in readings:
            if obj.sensor_kind in FRONT_KINDS:
                self.front_pipeline.enqueue(obj)
            else:
                self.rear_pipeline.enqueue(obj)
        deltas = (self.front_pipeline.process_pending(t)
                  + self.rear_pipeline.process_pending(t))
        self.client_tracks = apply_deltas(self.client_tracks, deltas)

    def _run_grid(self, t: float) -> None:
        ego = self.ego_state()
        self.grid.relocate_origin((ego.x, ego.y))
        origins, targets = terrain_rays(self.world, ego, road_strips(self.rndf),
                                        self.scenario.off_road_height)
        self.grid.ray_update_batch(origins, targets, t)
        ci, cj = self.grid.world_to_cell(ego.x, ego.y)
        half = 100
        region = Region(ci - half, cj - half, 2 * half, 2 * half)
        live = self.grid.live_region()
        region = Region(max(region.i0, live.i0), max(region.j0, live.j0),
                        min(region.ni, live.ni), min(region.nj, live.nj))
        self.grid.recompute_gradients(region)
        self.grid.fuse_gradient_region(self.grid_cfg, region)
        if self.road_mask is not None:
            sub = 60  # mono-vision style drivability in a tighter window
            ii, jj = np.meshgrid(np.arange(ci - sub, ci + sub),
                                 np.arange(cj - sub, cj + sub), indexing="ij")
            ii, jj = ii.ravel(), jj.ravel()
            p_d = self.road_mask.drivable(ii, jj).astype(float)
            d_max = 0.85
            d = d_max * p_d
            n = np.full_like(d, 1.0 - d_max)
            u = 1.0 - d - n
            self.grid.fuse_measurement(ii, jj, d, u, n)

    def _run_vision(self, t: float) -> None:
        # lane data comes from the ground-truth lane RNDF (the simulator's
        # second RNDF); the raster pipelines are exercised by their own tests
        pass

    def _obstacle_views(self) -> list[ObstacleView]:
        views = []
        for tid in sorted(self.client_tracks):
            rec = self.client_tracks[tid]
            contour = np.asarray(rec["contour"], dtype=float)
            if rec["model"] == "6D":
                alpha = rec.get("alpha", 0.0)
                vel = (rec["v"] * math.cos(alpha), rec["v"] * math.sin(alpha))
            else:
                vel = (0.0, 0.0)
            views.append(ObstacleView(contour=contour, velocity=vel))
        return views

    @staticmethod
    def _resample(line: np.ndarray, step: float = 2.5) -> np.ndarray:
        seg = np.hypot(np.diff(line[:, 0]), np.diff(line[:, 1]))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        if cum[-1] < step:
            return line
        s = np.arange(0.0, cum[-1] + step / 2, step)
        return np.stack([np.interp(s, cum, line[:, 0]),
                         np.interp(s, cum, line[:, 1])], axis=1)

    def _lane_centerline(self) -> np.ndarray | None:
        lane = self.route.current_lane()
        if lane is None:
            return None
        line = self._resample(lane.polyline())
        block = self._lane_block(lane, line)
        if block is None:
            return line
        adjacent = self._passing_lane(lane, block)
        if adjacent is None:
            return line
        return self._passing_centerline(line, self._resample(adjacent.polyline()),
                                        block)

    def _lane_block(self, lane, line) -> tuple[float, float] | None:
        """Along-lane range [s0, s1] occupied by a stopped track, if any."""
        ego = self.ego_state()
        seg = np.hypot(np.diff(line[:, 0]), np.diff(line[:, 1]))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        d_ego = np.hypot(line[:, 0] - ego.x, line[:, 1] - ego.y)
        s_ego = cum[int(np.argmin(d_ego))]
        for view in self._obstacle_views():
            if math.hypot(*view.velocity) > 0.5:
                continue
            dists = polyline_point_distances(view.contour, line)
            if dists.min() > lane.width / 2.0:
                continue
            d_pts = np.hypot(line[None, :, 0] - view.contour[:, 0:1],
                             line[None, :, 1] - view.contour[:, 1:2])
            s_pts = cum[np.argmin(d_pts, axis=1)]
            s0, s1 = float(s_pts.min()), float(s_pts.max())
            if s_ego - 2.0 < s1 and s0 < s_ego + 45.0:
                return (s0, s1)
        return None

    def _passing_lane(self, lane, block):
        """An adjacent same-segment lane that is clear at the blocked range."""
        best = None
        best_offset = math.inf
        for other in self.rndf.lanes.values():
            if other is lane or other.segment != lane.segment:
                continue
            other_line = other.polyline()
            mid = lane.polyline().mean(axis=0)
            offset = float(polyline_point_distances(np.asarray([mid]), other_line)[0])
            clear = True
            for view in self._obstacle_views():
                if polyline_point_distances(view.contour, other_line).min() \
                        < other.width / 2.0:
                    clear = False
                    break
            if clear and offset < best_offset:
                best, best_offset = other, offset
        return best

    def _passing_centerline(self, own, adjacent, block,
                            lead: float = 14.0, tail: float = 10.0) -> np.ndarray:
        """Own lane, bridged onto the adjacent lane across the blocked range."""
        seg = np.hypot(np.diff(own[:, 0]), np.diff(own[:, 1]))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        s0, s1 = block
        out = []
        for i, point in enumerate(own):
            s = cum[i]
            if s0 - lead <= s <= s1 + tail:
                d_adj = np.hypot(adjacent[:, 0] - point[0], adjacent[:, 1] - point[1])
                target = adjacent[int(np.argmin(d_adj))]
                # blend in/out near the edges of the window
                if s < s0 - lead / 2:
                    w = (s - (s0 - lead)) / (lead / 2)
                elif s > s1 + tail / 2:
                    w = ((s1 + tail) - s) / (tail / 2)
                else:
                    w = 1.0
                w = min(max(w, 0.0), 1.0)
                out.append(point * (1 - w) + target * w)
            else:
                out.append(point)
        return np.asarray(out)

    def _interrupt_context(self, ego: EgoState) -> InterruptContext:
        block_point = None
        oncoming_clear = True
        lane = self.route.current_lane()
        if lane is not None:
            line = lane.polyline()
            for view in self._obstacle_views():
                speed = math.hypot(*view.velocity)
                if speed > 0.5:
                    continue
                center = view.contour.mean(axis=0)
                dist_line = float(polyline_point_distances(
                    np.asarray([center]), line)[0])
                ahead = ((center[0] - ego.x) * math.cos(ego.heading)
                         + (center[1] - ego.y) * math.sin(ego.heading))
                if dist_line < lane.width / 2.0 and 4.0 < ahead < 40.0:
                    bx = ego.x + (ahead - 8.0) * math.cos(ego.heading)
                    by = ego.y + (ahead - 8.0) * math.sin(ego.heading)
                    block_point = (bx, by)
                    break
        return InterruptContext(
            pause=self.paused,
            estop=self.estop,
            road_blocked=self.road_blocked_flag,
            stop_points=self.route.upcoming_stop_points(),
            served_stop_points=frozenset(self.interrupts.served_stops),
            intersection_clear=self._intersection_clear(ego),
            lane_block_point=block_point,
            oncoming_clear=oncoming_clear,
            final_point=self.route.final_point(),
            mission_final_leg=self.route.on_final_leg(),
            u_turn_room=self._road_lateral_limits(ego),
            road_heading=self._road_heading(ego),
        )

    def _road_heading(self, ego: EgoState) -> float | None:
        lane = self.route.current_lane()
        if lane is None:
            return None
        line = lane.polyline()
        d = np.hypot(line[:, 0] - ego.x, line[:, 1] - ego.y)
        i = min(int(np.argmin(d)), len(line) - 2)
        return math.atan2(line[i + 1, 1] - line[i, 1], line[i + 1, 0] - line[i, 0])

    def _road_lateral_limits(self, ego: EgoState) -> tuple[float, float]:
        """Lateral room (left, right) over all lanes running alongside the ego.

        Adjacency is geometric: a lane counts when its polyline passes
        within 12 m and runs roughly parallel or antiparallel to the road
        direction, regardless of segment numbering.
        """
        heading = self._road_heading(ego)
        if heading is None:
            heading = ego.heading
        c, s = math.cos(heading), math.sin(heading)
        left, right = 2.0, -2.0
        ego_pt = np.asarray([[ego.x, ego.y]])
        for other in self.rndf.lanes.values():
            line = other.polyline()
            if float(polyline_point_distances(ego_pt, line)[0]) > 12.0:
                continue
            d = np.hypot(line[:, 0] - ego.x, line[:, 1] - ego.y)
            i = min(int(np.argmin(d)), len(line) - 2)
            seg_dir = math.atan2(line[i + 1, 1] - line[i, 1],
                                 line[i + 1, 0] - line[i, 0])
            mis = abs((seg_dir - heading + math.pi / 2) % math.pi - math.pi / 2)
            if mis > math.radians(30):
                continue
            j = int(np.argmin(d))
            lateral = -(line[j, 0] - ego.x) * s + (line[j, 1] - ego.y) * c
            left = max(left, lateral + other.width / 2.0)
            right = min(right, lateral - other.width / 2.0)
        return (left, right)

    def _intersection_clear(self, ego: EgoState) -> bool:
        state = self.interrupts.state
        if state is None or state.kind != "intersection":
            return True
        anchor = state.anchor
        for view in self._obstacle_views():
            speed = math.hypot(*view.velocity)
            center = view.contour.mean(axis=0)
            if speed > 0.5 and math.hypot(center[0] - anchor.x,
                                          center[1] - anchor.y) < 15.0:
                return False
        return True

    def _run_behavior(self, t: float) -> None:
        ego = self.ego_state()
        self.route.advance(ego.x, ego.y)
        for cid in self.route.visited_checkpoints:
            self.checkpoint_times.setdefault(cid, t)
        ictx = self._interrupt_context(ego)
        ctx = PlanContext(
            ego=ego,
            waypoints=self.route.upcoming_positions(40),
            lane_centerline=self._lane_centerline(),
            obstacles=self._obstacle_views(),
            grid=self.grid if self.scenario.grid_enabled else None,
            zone=None,
            speed_limits={"rndf_max": self.route.speed_limit()},
            interrupts=ictx,
        )
        self.last_votes = {}
        corridor = plan_corridor(ctx, self.interrupts, seq=self.clock.tick,
                                 collect_votes=self.last_votes)
        self.corridor = corridor
        # road-blocked detection: persistently truncated corridor
        if corridor.stop_flag and len(corridor.points) < 12:
            self.block_counter += 1
        else:
            self.block_counter = max(0, self.block_counter - 1)
        if self.block_counter >= 2 and not self.road_blocked_flag:
            self.road_blocked_flag = True
            self.u_turn_replan_pending = True
        directive = self.interrupts.update(ego, ictx)
        state = self.interrupts.state
        if state is not None and state.phase == "done":
            if state.data.get("replan") and self.u_turn_replan_pending:
                self._replan_after_u_turn(ego)
                self.u_turn_replan_pending = False
                self.road_blocked_flag = False
                self.block_counter = 0
            self.interrupts.clear_done()
        if self.interrupts.completed:
            self.completed = True
        self.ego_behavior.set_corridor(corridor)
        self.ego_behavior.set_directive(directive.mode, directive.v_set,
                                        directive.kappa, directive.gear)

    def _replan_after_u_turn(self, ego: EgoState) -> None:
        blocked = set()
        state = self.interrupts.state
        anchor = (state.anchor.x, state.anchor.y) if state else (ego.x, ego.y)
        probe = (anchor[0] + 15.0 * math.cos(ego.heading + math.pi),
                 anchor[1] + 15.0 * math.sin(ego.heading + math.pi))
        from .route import build_edges

        for src, targets in build_edges(self.rndf).items():
            w1 = self.rndf.waypoint(src)
            for dst, _cost in targets:
                w2 = self.rndf.waypoint(dst)
                seg = np.asarray([[w1.x, w1.y], [w2.x, w2.y]])
                d = polyline_point_distances(np.asarray([probe]), seg)[0]
                if d < 12.0:
                    blocked.add((src, dst))
        try:
            self.route = self.route.replan_from(ego.x, ego.y, ego.heading, blocked)
        except RouteError:
            self.aborted = True
            self.abort_reason = "no route after U-turn"

    # ----------------------------------------------------------------- run

    def step(self) -> None:
        t = self.clock.now
        for cmd in self.pending_commands:
            ack = self._apply_command(cmd)
            self.command_log.append({"command": cmd, "ack": ack, "t": t})
        self.pending_commands.clear()

        if not self._slave_fault_active(t):
            self.watchdog.slave_beat(t)
        for spec in STAGE_SPECS:
            if not self._due(spec.name, spec.interval):
                continue
            if self._fault_active(spec.name, t):
                continue   # silenced stage: no run, no heartbeat
            if spec.name == "fusion":
                self._run_fusion(t)
            elif spec.name == "grid" and self.scenario.grid_enabled:
                self._run_grid(t)
            elif spec.name == "vision":
                self._run_vision(t)
            elif spec.name == "behavior":
                self._run_behavior(t)
            # control runs inside the world step below
            self.watchdog.beat(spec.name, t)

        actions = self.watchdog.tick(t)
        if actions.estop and not self.estop:
            self.estop = True
            self.ego_behavior.estop = True
        if actions.abort:
            self.aborted = True
            self.abort_reason = "; ".join(actions.notes)
        if actions.restarts:
            self._restart_stages(actions.restarts)

        self.world.step(self.scenario.dt)
        self.clock.advance()
        t = self.clock.now

        vctx = {
            "ego_speed": self.ego_state().speed,
            "speed_limit": self.route.speed_limit(),
            "visited_checkpoints": self.route.visited_checkpoints,
            "mission_ended": False,
        }
        verdicts = run_validators(self.world, self.validators, vctx, t)
        self._last_verdicts = verdicts
        self.failures.extend(v for v in verdicts if not v.passed)
        self._record_trace(t)
        if self.on_state is not None and t - self._last_state_emit >= 0.1 - 1e-9:
            self._last_state_emit = t
            self.on_state(self)

        if self.route.mission_complete() and abs(self.ego_state().speed) < 0.3:
            self.completed = True

    def _restart_stages(self, stages: list[str]) -> None:
        for name in stages:
            if name == "fusion":
                self.front_pipeline = FusionPipeline(self.fusion_cfg, name="front",
                                                     id_start=1000)
                self.rear_pipeline = FusionPipeline(self.fusion_cfg, name="rear",
                                                    id_start=2000)
                self.client_tracks = {}
            elif name == "grid":
                self.grid = RollingGrid(cell_size=0.25, extent=400, sub=16)
            elif name == "behavior":
                served = self.interrupts.served_stops
                self.interrupts = InterruptManager()
                self.interrupts.served_stops = served
                self.block_counter = 0
            elif name == "control":
                from ..control import LateralCtrlState, LongitudinalCtrlState

                self.ego_behavior.lat_ctrl = LateralCtrlState()
                self.ego_behavior.lon_ctrl = LongitudinalCtrlState()
        self._clear_faults(stages)

    def _record_trace(self, t: float) -> None:
        ego = self.ego_state()
        cmd = self.ego_behavior.last_command
        clearance = math.inf
        ego_poly = self.world.ego().polygon_world()
        from .validators import polygon_distance

        for obj in self.world.objects.values():
            if obj.kind != "ego":
                clearance = min(clearance,
                                polygon_distance(ego_poly, obj.polygon_world()))
        interrupt = ""
        if self.interrupts.state is not None and self.interrupts.state.phase != "done":
            interrupt = self.interrupts.state.kind
        self.trace.append(TraceRow(
            t=t, x=ego.x, y=ego.y, heading=ego.heading, v=ego.speed,
            v_set=getattr(self.ego_behavior, "last_v_set", 0.0),
            a_req=self.ego_behavior.lon_ctrl.a_req,
            throttle=cmd.throttle if cmd else 0.0,
            brake=cmd.brake if cmd else 0.0,
            delta_cmd=self.ego_behavior.lat_ctrl.delta_cmd,
            d=getattr(self.ego_behavior, "last_d", 0.0),
            psi_rel=getattr(self.ego_behavior, "last_psi_rel", 0.0),
            clearance=clearance if math.isfinite(clearance) else 1e9,
            interrupt=interrupt,
        ))

    def run(self) -> dict:
        max_ticks = int(self.scenario.duration / self.scenario.dt)
        while self.clock.tick < max_ticks:
            self.step()
            if self.completed or self.aborted:
                break
        # final checkpoint-completion verdict
        vctx = {
            "ego_speed": self.ego_state().speed,
            "speed_limit": self.route.speed_limit(),
            "visited_checkpoints": self.route.visited_checkpoints,
            "mission_ended": True,
        }
        verdicts = run_validators(self.world, self.validators, vctx, self.clock.now)
        self.failures.extend(v for v in verdicts if not v.passed)
        return self.report()

    def report(self) -> dict:
        return {
            "scenario": self.scenario.name,
            "seed": self.scenario.seed,
            "completed": self.completed and not self.aborted,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "t_end": round(self.clock.now, 6),
            "checkpoints": [{"id": cid, "t": round(self.checkpoint_times[cid], 6)}
                            for cid in sorted(self.checkpoint_times)],
            "validator_summary": {v.name: v.summary() for v in self.validators},
            "failures": [{"validator": f.name, "t": round(f.t, 6),
                          "measurement": (f.measurement
                                          if math.isfinite(f.measurement) else 1e9),
                          "note": f.note}
                         for f in self.failures[:200]],
        }

    def report_json(self) -> str:
        return json.dumps(self.report(), sort_keys=True, separators=(",", ":"))

    def trace_csv(self) -> str:
        return TraceRow.HEADER + "\n" + "\n".join(r.csv() for r in self.trace) + "\n"


def run_mission(scenario: Scenario, on_state=None) -> dict:
    return MissionRunner(scenario, on_state=on_state).run()
