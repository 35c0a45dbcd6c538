"""Interrupt system layered over the arbiters.

Interrupts claim a trajectory point, the corridor speeds are shaped for a
smooth stop at that anchor, and on arrival the interrupt takes over until
it returns control.  At most one interrupt is active; conflicts resolve
by the fixed priority order (pause first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..geometry import Pose2, normalize_angle

PRIORITY = ("pause", "road_blocked", "intersection", "queue", "overtake",
            "parking", "u_turn", "mission_complete")

PHASES = ("armed", "slowing", "active", "done")


@dataclass
class InterruptState:
    kind: str
    phase: str
    anchor: Pose2
    claimed_index: int = 0
    data: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in PRIORITY:
            raise ValueError(f"unknown interrupt kind: {self.kind}")
        if self.phase not in PHASES:
            raise ValueError(f"unknown interrupt phase: {self.phase}")


@dataclass
class Directive:
    """What the active interrupt wants from the control layer this tick."""

    mode: str = "corridor"          # corridor | hold | direct
    v_set: float = 0.0
    kappa: float = 0.0
    gear: str = "forward"


def shape_speeds(speeds: list[float], anchor_index: int, a_comf: float,
                 hold_after: bool = True) -> list[float]:
    """Cap speeds so the vehicle can stop at the anchor: v = sqrt(2 a s).

    With ``hold_after`` the reference stays zero past the anchor, so the
    vehicle cannot creep beyond it before the interrupt releases control.
    """
    out = list(speeds)
    for i in range(len(out)):
        if i <= anchor_index:
            out[i] = min(out[i], math.sqrt(2.0 * a_comf * (anchor_index - i)))
        elif hold_after:
            out[i] = 0.0
    return out


@dataclass
class InterruptContext:
    """Flags prepared by the mission layer for interrupt decisions."""

    pause: bool = False
    estop: bool = False
    road_blocked: bool = False
    dead_end_point: tuple[float, float] | None = None
    stop_points: tuple[tuple[float, float], ...] = ()
    served_stop_points: frozenset = frozenset()
    intersection_clear: bool = True
    queue_anchor: tuple[float, float] | None = None
    queue_gap_open: bool = True
    lane_block_point: tuple[float, float] | None = None
    oncoming_clear: bool = True
    parking_align_point: tuple[float, float] | None = None
    parking_heading: float = 0.0
    final_point: tuple[float, float] | None = None
    mission_final_leg: bool = False
    u_turn_room: tuple[float, float] = (7.0, -2.0)   # lateral room (left, right)
    road_heading: float | None = None                # lane direction at the ego


def _near(point: Pose2, target, radius: float) -> bool:
    return math.hypot(point.x - target[0], point.y - target[1]) <= radius


def _claim_anchor(kind: str, idx: int, point: Pose2,
                  ctx: InterruptContext) -> tuple[float, float] | None:
    """Anchor position when this interrupt claims the given trajectory point."""
    if kind == "pause":
        return (point.x, point.y) if ctx.pause and idx == 0 else None
    if kind == "road_blocked":
        return (point.x, point.y) if ctx.road_blocked and idx == 0 else None
    if kind == "intersection":
        for sp in ctx.stop_points:
            if tuple(sp) not in ctx.served_stop_points and _near(point, sp, 1.0):
                return tuple(sp)
        return None
    if kind == "queue":
        if ctx.queue_anchor is not None and _near(point, ctx.queue_anchor, 1.0):
            return tuple(ctx.queue_anchor)
        return None
    if kind == "overtake":
        if (ctx.lane_block_point is not None and not ctx.oncoming_clear
                and _near(point, ctx.lane_block_point, 1.0)):
            return tuple(ctx.lane_block_point)
        return None
    if kind == "parking":
        if (ctx.parking_align_point is not None
                and _near(point, ctx.parking_align_point, 1.0)):
            return tuple(ctx.parking_align_point)
        return None
    if kind == "u_turn":
        if ctx.dead_end_point is not None and _near(point, ctx.dead_end_point, 1.5):
            return tuple(ctx.dead_end_point)
        return None
    if kind == "mission_complete":
        if (ctx.mission_final_leg and ctx.final_point is not None
                and _near(point, ctx.final_point, 1.5)):
            return tuple(ctx.final_point)
        return None
    return None


class InterruptManager:
    """Single active interrupt plus its lifecycle against the ego state."""

    def __init__(self, a_comf: float = 2.0, eps_pos: float = 0.5,
                 eps_speed: float = 0.2, u_turn_kappa: float = 0.17,
                 u_turn_speed: float = 1.5):
        self.a_comf = a_comf
        self.eps_pos = eps_pos
        self.eps_speed = eps_speed
        self.u_turn_kappa = u_turn_kappa
        self.u_turn_speed = u_turn_speed
        self.state: Optional[InterruptState] = None
        self.served_stops: set[tuple[float, float]] = set()
        self.completed: bool = False

    # ------------------------------------------------------------- claiming

    def check_corridor(self, points, speeds, ctx: InterruptContext):
        """Scan trajectory points; the first claim wins (priority on ties).

        Returns (shaped speeds, claimed state or None).
        """
        if self.state is not None and self.state.phase != "done":
            if self.state.phase in ("armed", "slowing"):
                idx = self._anchor_index(points)
                return shape_speeds(speeds, idx, self.a_comf), self.state
            return speeds, self.state
        for idx, point in enumerate(points):
            for kind in PRIORITY:
                anchor_xy = _claim_anchor(kind, idx, point, ctx)
                if anchor_xy is not None:
                    anchor = Pose2(anchor_xy[0], anchor_xy[1], point.heading)
                    self.state = InterruptState(kind=kind, phase="armed",
                                                anchor=anchor, claimed_index=idx)
                    if kind == "intersection":
                        self.state.data["stop_point"] = anchor_xy
                    anchor_idx = self._anchor_index(points)
                    return shape_speeds(speeds, anchor_idx, self.a_comf), self.state
        return speeds, None

    def _anchor_index(self, points) -> int:
        if not points or self.state is None:
            return 0
        d = [math.hypot(p.x - self.state.anchor.x, p.y - self.state.anchor.y)
             for p in points]
        return int(np.argmin(d))

    # ------------------------------------------------------------ lifecycle

    def update(self, ego, ctx: InterruptContext) -> Directive:
        """Advance the interrupt state machine; called once per behavior tick."""
        st = self.state
        if st is None or st.phase == "done":
            return Directive(mode="corridor")
        if st.phase == "armed":
            st.phase = "slowing"
        if st.phase == "slowing":
            arrived = (math.hypot(ego.x - st.anchor.x, ego.y - st.anchor.y) <= self.eps_pos
                       and abs(ego.speed) <= self.eps_speed)
            # pause and road_blocked take effect wherever the car is
            if st.kind in ("pause", "road_blocked") and abs(ego.speed) <= self.eps_speed:
                arrived = True
            if not arrived:
                return Directive(mode="corridor")
            st.phase = "active"
            if st.kind == "u_turn":
                self._init_u_turn(st, ego, ctx)
        return self._run_active(ego, ctx)

    @staticmethod
    def _init_u_turn(st: InterruptState, ego, ctx: InterruptContext) -> None:
        # the maneuver frame follows the road, not the (possibly skewed) ego
        base = ctx.road_heading if ctx.road_heading is not None else ego.heading
        st.data.update(start_heading=base, stage=0,
                       origin=(ego.x, ego.y),
                       room=tuple(ctx.u_turn_room))

    def _run_active(self, ego, ctx: InterruptContext) -> Directive:
        st = self.state
        if st.kind == "pause":
            if ctx.pause:
                return Directive(mode="hold")
            self._finish()
            return Directive(mode="corridor")
        if st.kind == "intersection":
            if ctx.intersection_clear:
                self.served_stops.add(st.data.get("stop_point", (st.anchor.x, st.anchor.y)))
                self._finish()
                return Directive(mode="corridor")
            return Directive(mode="hold")
        if st.kind == "queue":
            if ctx.queue_gap_open:
                self._finish()
                return Directive(mode="corridor")
            return Directive(mode="hold")
        if st.kind == "overtake":
            if ctx.oncoming_clear:
                self._finish()
                return Directive(mode="corridor")
            return Directive(mode="hold")
        if st.kind == "road_blocked":
            # hand over to the U-turn maneuver in place
            st.kind = "u_turn"
            self._init_u_turn(st, ego, ctx)
            return self._run_active(ego, ctx)
        if st.kind == "u_turn":
            return self._run_u_turn(ego)
        if st.kind == "parking":
            return self._run_parking(ego, ctx)
        if st.kind == "mission_complete":
            self.completed = True
            return Directive(mode="hold")
        raise AssertionError(f"unhandled interrupt {st.kind}")

    def _run_u_turn(self, ego) -> Directive:
        """Space-aware three-point turn.

        Backs up straight for maneuvering room, then arcs forward-left,
        reverse-right and forward-left again; the forward/reverse switches
        trigger on the lateral room measured in the anchor frame.
        """
        st = self.state
        start = st.data["start_heading"]
        ox, oy = st.data["origin"]
        left_room, right_room = st.data["room"]
        turned = abs(normalize_angle(ego.heading - start))
        # lateral offset in the anchor frame (left of the original heading)
        lateral = (-(ego.x - ox) * math.sin(start) + (ego.y - oy) * math.cos(start))
        stage = st.data.get("stage", 0)
        if stage > 0 and turned >= math.pi - 0.15:
            self._finish()
            st.data["replan"] = True
            return Directive(mode="corridor")
        if stage == 0:
            back = math.hypot(ego.x - ox, ego.y - oy)
            if back >= 6.0:
                st.data["stage"] = stage = 1
            else:
                return Directive(mode="direct", v_set=self.u_turn_speed,
                                 kappa=0.0, gear="reverse")
        margin = 1.2 / self.u_turn_kappa * 0.35   # keep clear of the road edge
        if stage == 1 and (lateral >= left_room - margin or turned >= 1.9):
            st.data["stage"] = stage = 2
        if stage == 2 and (lateral <= right_room + margin or turned >= 2.6):
            st.data["stage"] = stage = 3
        if stage == 2:
            return Directive(mode="direct", v_set=self.u_turn_speed,
                             kappa=-self.u_turn_kappa, gear="reverse")
        return Directive(mode="direct", v_set=self.u_turn_speed,
                         kappa=self.u_turn_kappa, gear="forward")

    def _run_parking(self, ego, ctx: InterruptContext) -> Directive:
        st = self.state
        stage = st.data.setdefault("stage", 0)
        st.data["ticks"] = st.data.get("ticks", 0) + 1
        if stage == 0:   # pull forward into the spot
            if st.data["ticks"] * 1 >= st.data.get("pull_ticks", 30):
                st.data["stage"] = 1
                st.data["ticks"] = 0
            return Directive(mode="direct", v_set=1.0, kappa=0.0, gear="forward")
        if stage == 1:   # settle
            if st.data["ticks"] >= st.data.get("hold_ticks", 20):
                st.data["stage"] = 2
                st.data["ticks"] = 0
            return Directive(mode="hold")
        if st.data["ticks"] >= st.data.get("pull_ticks", 30):
            self._finish()
            return Directive(mode="corridor")
        return Directive(mode="direct", v_set=1.0, kappa=0.0, gear="reverse")

    def _finish(self) -> None:
        if self.state is not None:
            self.state.phase = "done"

    def clear_done(self) -> None:
        if self.state is not None and self.state.phase == "done":
            self.state = None
