"""Route network definition files: a meters-based, line-oriented road graph.

Grammar (one directive per line, ``#`` comments allowed):

    segment <n>
    lane <n>.<m> <width_m>
    waypoint <n>.<m>.<k> <x> <y>
    stop <n>.<m>.<k>
    exit <n>.<m>.<k> <p>.<q>.<r>
    checkpoint <n>.<m>.<k> <id>
    zone <z>
    perimeter <x> <y>
    spot <z>.<s> <x> <y> <heading>

Waypoints are ordered within their lane; the order defines the driving
direction.  Exits connect lane end/entry waypoints across the graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import Polygon2


class RndfError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


WaypointId = tuple[int, int, int]


@dataclass
class Waypoint:
    id: WaypointId
    x: float
    y: float
    is_stop: bool = False
    checkpoint: int | None = None

    @property
    def name(self) -> str:
        return f"{self.id[0]}.{self.id[1]}.{self.id[2]}"

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class Lane:
    segment: int
    lane: int
    width: float
    waypoints: list[Waypoint] = field(default_factory=list)

    @property
    def name(self) -> str:
        return f"{self.segment}.{self.lane}"

    def polyline(self) -> np.ndarray:
        return np.asarray([[w.x, w.y] for w in self.waypoints], dtype=float)

    def heading_at(self, index: int) -> float:
        wps = self.waypoints
        j = min(index, len(wps) - 2)
        a, b = wps[j], wps[j + 1]
        return math.atan2(b.y - a.y, b.x - a.x)


@dataclass
class ParkingSpot:
    zone: int
    spot: int
    x: float
    y: float
    heading: float = 0.0


@dataclass
class Zone:
    id: int
    perimeter: list[tuple[float, float]] = field(default_factory=list)
    spots: list[ParkingSpot] = field(default_factory=list)

    def polygon(self) -> Polygon2:
        return Polygon2.from_points(self.perimeter)


@dataclass
class RNDF:
    lanes: dict[str, Lane] = field(default_factory=dict)
    zones: dict[int, Zone] = field(default_factory=dict)
    exits: list[tuple[WaypointId, WaypointId]] = field(default_factory=list)

    def waypoint(self, wid: WaypointId) -> Waypoint:
        lane = self.lanes.get(f"{wid[0]}.{wid[1]}")
        if lane is None:
            raise KeyError(f"no lane {wid[0]}.{wid[1]}")
        for w in lane.waypoints:
            if w.id == wid:
                return w
        raise KeyError(f"no waypoint {wid}")

    def has_waypoint(self, wid: WaypointId) -> bool:
        try:
            self.waypoint(wid)
            return True
        except KeyError:
            return False

    def all_waypoints(self) -> list[Waypoint]:
        out = []
        for key in sorted(self.lanes, key=lambda k: tuple(int(p) for p in k.split("."))):
            out.extend(self.lanes[key].waypoints)
        return out

    def checkpoints(self) -> dict[int, Waypoint]:
        return {w.checkpoint: w for w in self.all_waypoints() if w.checkpoint is not None}

    def stop_waypoints(self) -> list[Waypoint]:
        return [w for w in self.all_waypoints() if w.is_stop]


def _parse_wid(token: str, line: int) -> WaypointId:
    parts = token.split(".")
    if len(parts) != 3:
        raise RndfError(f"expected waypoint id n.m.k, got {token!r}", line)
    try:
        return (int(parts[0]), int(parts[1]), int(parts[2]))
    except ValueError:
        raise RndfError(f"bad waypoint id {token!r}", line) from None


def parse_rndf(text: str) -> RNDF:
    rndf = RNDF()
    current_segment: int | None = None
    current_lane: Lane | None = None
    current_zone: Zone | None = None
    pending: list[tuple[int, WaypointId, WaypointId]] = []
    checkpoint_ids: dict[int, WaypointId] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        keyword, args = tokens[0], tokens[1:]
        if keyword == "segment":
            if len(args) != 1 or not args[0].isdigit():
                raise RndfError("segment takes one integer id", lineno)
            current_segment = int(args[0])
            current_lane = None
            current_zone = None
        elif keyword == "lane":
            if current_segment is None:
                raise RndfError("lane outside any segment", lineno)
            if len(args) != 2:
                raise RndfError("lane takes id and width", lineno)
            parts = args[0].split(".")
            if len(parts) != 2 or int(parts[0]) != current_segment:
                raise RndfError(f"lane id {args[0]!r} does not match segment "
                                f"{current_segment}", lineno)
            lane = Lane(segment=int(parts[0]), lane=int(parts[1]), width=float(args[1]))
            if lane.width <= 0:
                raise RndfError("lane width must be positive", lineno)
            if lane.name in rndf.lanes:
                raise RndfError(f"duplicate lane {lane.name}", lineno)
            rndf.lanes[lane.name] = lane
            current_lane = lane
        elif keyword == "waypoint":
            if current_lane is None:
                raise RndfError("waypoint outside any lane", lineno)
            if len(args) != 3:
                raise RndfError("waypoint takes id, x, y", lineno)
            wid = _parse_wid(args[0], lineno)
            if (wid[0], wid[1]) != (current_lane.segment, current_lane.lane):
                raise RndfError(f"waypoint {args[0]} not in lane {current_lane.name}",
                                lineno)
            try:
                x, y = float(args[1]), float(args[2])
            except ValueError:
                raise RndfError("bad waypoint coordinates", lineno) from None
            if any(w.id == wid for w in current_lane.waypoints):
                raise RndfError(f"duplicate waypoint {args[0]}", lineno)
            current_lane.waypoints.append(Waypoint(id=wid, x=x, y=y))
        elif keyword == "stop":
            if len(args) != 1:
                raise RndfError("stop takes a waypoint id", lineno)
            pending.append((lineno, _parse_wid(args[0], lineno), ("stop",)))  # type: ignore[arg-type]
        elif keyword == "exit":
            if len(args) != 2:
                raise RndfError("exit takes two waypoint ids", lineno)
            pending.append((lineno, _parse_wid(args[0], lineno),
                            _parse_wid(args[1], lineno)))
        elif keyword == "checkpoint":
            if len(args) != 2:
                raise RndfError("checkpoint takes waypoint id and checkpoint id", lineno)
            wid = _parse_wid(args[0], lineno)
            try:
                cid = int(args[1])
            except ValueError:
                raise RndfError("checkpoint id must be an integer", lineno) from None
            if cid in checkpoint_ids:
                raise RndfError(f"duplicate checkpoint id {cid}", lineno)
            checkpoint_ids[cid] = wid
            pending.append((lineno, wid, ("checkpoint", cid)))  # type: ignore[arg-type]
        elif keyword == "zone":
            if len(args) != 1 or not args[0].isdigit():
                raise RndfError("zone takes one integer id", lineno)
            zid = int(args[0])
            if zid in rndf.zones:
                raise RndfError(f"duplicate zone {zid}", lineno)
            current_zone = Zone(id=zid)
            rndf.zones[zid] = current_zone
            current_lane = None
        elif keyword == "perimeter":
            if current_zone is None:
                raise RndfError("perimeter outside any zone", lineno)
            if len(args) != 2:
                raise RndfError("perimeter takes x and y", lineno)
            current_zone.perimeter.append((float(args[0]), float(args[1])))
        elif keyword == "spot":
            if current_zone is None:
                raise RndfError("spot outside any zone", lineno)
            if len(args) != 4:
                raise RndfError("spot takes id, x, y, heading", lineno)
            parts = args[0].split(".")
            if len(parts) != 2 or int(parts[0]) != current_zone.id:
                raise RndfError(f"spot id {args[0]!r} not in zone {current_zone.id}",
                                lineno)
            current_zone.spots.append(ParkingSpot(
                zone=int(parts[0]), spot=int(parts[1]),
                x=float(args[1]), y=float(args[2]), heading=float(args[3])))
        else:
            raise RndfError(f"unknown keyword {keyword!r}", lineno)

    # resolve deferred references with their source line numbers
    for lineno, wid, extra in pending:
        if not rndf.has_waypoint(wid):
            raise RndfError(f"reference to missing waypoint "
                            f"{wid[0]}.{wid[1]}.{wid[2]}", lineno)
        if extra == ("stop",):
            rndf.waypoint(wid).is_stop = True
        elif isinstance(extra, tuple) and extra and extra[0] == "checkpoint":
            rndf.waypoint(wid).checkpoint = extra[1]
        else:
            if not rndf.has_waypoint(extra):
                raise RndfError(f"exit to missing waypoint "
                                f"{extra[0]}.{extra[1]}.{extra[2]}", lineno)
            rndf.exits.append((wid, extra))

    for lane in rndf.lanes.values():
        if len(lane.waypoints) < 2:
            raise RndfError(f"lane {lane.name} needs at least 2 waypoints")
    for zone in rndf.zones.values():
        if len(zone.perimeter) < 3:
            raise RndfError(f"zone {zone.id} perimeter needs at least 3 points")
        zone.polygon()   # validates simplicity
    return rndf


def serialize_rndf(rndf: RNDF) -> str:
    lines: list[str] = []
    by_segment: dict[int, list[Lane]] = {}
    for lane in rndf.lanes.values():
        by_segment.setdefault(lane.segment, []).append(lane)
    for seg in sorted(by_segment):
        lines.append(f"segment {seg}")
        for lane in sorted(by_segment[seg], key=lambda l: l.lane):
            lines.append(f"lane {lane.name} {lane.width}")
            for w in lane.waypoints:
                lines.append(f"waypoint {w.name} {w.x} {w.y}")
            for w in lane.waypoints:
                if w.is_stop:
                    lines.append(f"stop {w.name}")
                if w.checkpoint is not None:
                    lines.append(f"checkpoint {w.name} {w.checkpoint}")
    for src, dst in rndf.exits:
        lines.append(f"exit {src[0]}.{src[1]}.{src[2]} {dst[0]}.{dst[1]}.{dst[2]}")
    for zid in sorted(rndf.zones):
        zone = rndf.zones[zid]
        lines.append(f"zone {zid}")
        for x, y in zone.perimeter:
            lines.append(f"perimeter {x} {y}")
        for s in zone.spots:
            lines.append(f"spot {s.zone}.{s.spot} {s.x} {s.y} {s.heading}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SpeedLimit:
    segment: int
    max_mps: float


@dataclass
class MDF:
    """Mission: ordered checkpoints plus per-segment speed limits."""

    checkpoints: list[int]
    speed_limits: list[SpeedLimit] = field(default_factory=list)
    default_max_mps: float = 13.4

    def limit_for_segment(self, segment: int) -> float:
        for sl in self.speed_limits:
            if sl.segment == segment:
                return sl.max_mps
        return self.default_max_mps
