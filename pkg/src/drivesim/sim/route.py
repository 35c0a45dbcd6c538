"""Route planning over the RNDF graph: lane edges plus exits."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .rndf import MDF, RNDF, Waypoint, WaypointId


class RouteError(ValueError):
    pass


def build_edges(rndf: RNDF, blocked: set[tuple[WaypointId, WaypointId]] | None = None):
    blocked = blocked or set()
    edges: dict[WaypointId, list[tuple[WaypointId, float]]] = {}
    def add(a: Waypoint, b: Waypoint):
        if (a.id, b.id) in blocked:
            return
        edges.setdefault(a.id, []).append((b.id, math.hypot(b.x - a.x, b.y - a.y)))
    for lane in rndf.lanes.values():
        for w1, w2 in zip(lane.waypoints[:-1], lane.waypoints[1:]):
            add(w1, w2)
    for src, dst in rndf.exits:
        add(rndf.waypoint(src), rndf.waypoint(dst))
    return edges


def shortest_path(rndf: RNDF, start: WaypointId, goal: WaypointId,
                  blocked: set | None = None) -> list[WaypointId]:
    edges = build_edges(rndf, blocked)
    dist: dict[WaypointId, float] = {start: 0.0}
    prev: dict[WaypointId, WaypointId] = {}
    heap: list[tuple[float, WaypointId]] = [(0.0, start)]
    seen: set[WaypointId] = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in seen:
            continue
        seen.add(node)
        if node == goal:
            path = [node]
            while node != start:
                node = prev[node]
                path.append(node)
            return path[::-1]
        for nxt, w in edges.get(node, []):
            nd = d + w
            if nd < dist.get(nxt, math.inf):
                dist[nxt] = nd
                prev[nxt] = node
                heapq.heappush(heap, (nd, nxt))
    raise RouteError(f"no route from {start} to {goal}")


def nearest_waypoint(rndf: RNDF, x: float, y: float,
                     heading: float | None = None) -> Waypoint:
    """Entry waypoint of the best-matching lane.

    Lanes are ranked by projection distance onto their polyline plus a
    heading-mismatch penalty; the returned waypoint is the one just ahead
    of the projection, so planning continues downstream.
    """
    best, best_cost = None, math.inf
    for lane in rndf.lanes.values():
        wps = lane.waypoints
        for i in range(len(wps) - 1):
            ax, ay = wps[i].xy
            bx, by = wps[i + 1].xy
            sq = (bx - ax) ** 2 + (by - ay) ** 2
            t = 0.0 if sq == 0 else max(0.0, min(1.0, ((x - ax) * (bx - ax)
                                                       + (y - ay) * (by - ay)) / sq))
            px, py = ax + t * (bx - ax), ay + t * (by - ay)
            cost = math.hypot(x - px, y - py)
            if heading is not None:
                lane_heading = math.atan2(by - ay, bx - ax)
                mis = abs((lane_heading - heading + math.pi) % (2 * math.pi) - math.pi)
                cost += 4.0 * mis
            if cost < best_cost:
                best = wps[i + 1] if t > 1e-9 else wps[i]
                best_cost = cost
    if best is None:
        raise RouteError("RNDF has no waypoints")
    return best


@dataclass
class Route:
    """The mission route: checkpoint-chained waypoint sequence."""

    rndf: RNDF
    mdf: MDF
    waypoints: list[Waypoint] = field(default_factory=list)
    next_index: int = 0
    visited_checkpoints: list[int] = field(default_factory=list)
    blocked: set = field(default_factory=set)

    @classmethod
    def plan(cls, rndf: RNDF, mdf: MDF, start_xy, start_heading=None,
             blocked: set | None = None) -> "Route":
        blocked = blocked or set()
        checkpoints = rndf.checkpoints()
        for cid in mdf.checkpoints:
            if cid not in checkpoints:
                raise RouteError(f"mission checkpoint {cid} not in RNDF")
        node = nearest_waypoint(rndf, start_xy[0], start_xy[1], start_heading).id
        ids: list[WaypointId] = [node]
        for cid in mdf.checkpoints:
            leg = shortest_path(rndf, node, checkpoints[cid].id, blocked)
            ids.extend(leg[1:])
            node = checkpoints[cid].id
        return cls(rndf=rndf, mdf=mdf,
                   waypoints=[rndf.waypoint(w) for w in ids], blocked=set(blocked))

    def positions(self) -> np.ndarray:
        return np.asarray([[w.x, w.y] for w in self.waypoints], dtype=float)

    def advance(self, x: float, y: float, reach: float = 3.0) -> None:
        """Move the route cursor past waypoints reached or left behind.

        Checkpoints only count as visited inside the reach radius; a
        waypoint merely driven past (e.g. on the adjacent lane while
        overtaking) is skipped without credit.
        """
        while self.next_index < len(self.waypoints):
            w = self.waypoints[self.next_index]
            if math.hypot(w.x - x, w.y - y) <= reach:
                if (w.checkpoint is not None
                        and w.checkpoint not in self.visited_checkpoints
                        and self._is_next_mission_checkpoint(w.checkpoint)):
                    self.visited_checkpoints.append(w.checkpoint)
                self.next_index += 1
                continue
            if self.next_index + 1 < len(self.waypoints):
                nxt = self.waypoints[self.next_index + 1]
                dx, dy = nxt.x - w.x, nxt.y - w.y
                norm = math.hypot(dx, dy)
                if norm > 1e-9:
                    along = ((x - w.x) * dx + (y - w.y) * dy) / norm
                    if along > 2.0 and math.hypot(w.x - x, w.y - y) < 12.0:
                        self.next_index += 1
                        continue
            break

    def _is_next_mission_checkpoint(self, cid: int) -> bool:
        remaining = [c for c in self.mdf.checkpoints if c not in self.visited_checkpoints]
        return bool(remaining) and remaining[0] == cid

    def upcoming(self, count: int = 20) -> list[Waypoint]:
        return self.waypoints[self.next_index:self.next_index + count]

    def upcoming_positions(self, count: int = 20) -> np.ndarray:
        wps = self.upcoming(count)
        if not wps:
            return np.zeros((0, 2))
        return np.asarray([[w.x, w.y] for w in wps], dtype=float)

    def upcoming_stop_points(self, count: int = 20):
        return tuple((w.x, w.y) for w in self.upcoming(count) if w.is_stop)

    def current_lane(self):
        wps = self.upcoming(1) or self.waypoints[-1:]
        if not wps:
            return None
        return self.rndf.lanes.get(f"{wps[0].id[0]}.{wps[0].id[1]}")

    def mission_complete(self) -> bool:
        return all(c in self.visited_checkpoints for c in self.mdf.checkpoints)

    def final_point(self):
        cps = self.rndf.checkpoints()
        if not self.mdf.checkpoints:
            return None
        final = cps[self.mdf.checkpoints[-1]]
        return (final.x, final.y)

    def on_final_leg(self) -> bool:
        remaining = [c for c in self.mdf.checkpoints if c not in self.visited_checkpoints]
        return len(remaining) <= 1

    def speed_limit(self) -> float:
        lane = self.current_lane()
        if lane is None:
            return self.mdf.default_max_mps
        return self.mdf.limit_for_segment(lane.segment)

    def replan_from(self, x: float, y: float, heading: float,
                    extra_blocked: set | None = None) -> "Route":
        blocked = set(self.blocked) | (extra_blocked or set())
        remaining = [c for c in self.mdf.checkpoints if c not in self.visited_checkpoints]
        mdf = MDF(checkpoints=remaining, speed_limits=self.mdf.speed_limits,
                  default_max_mps=self.mdf.default_max_mps)
        new = Route.plan(self.rndf, mdf, (x, y), heading, blocked)
        new.visited_checkpoints = list(self.visited_checkpoints)
        new.mdf = self.mdf
        return new
