"""Synthetic object-level sensors and terrain rays for the grid.

Sensor wedges mirror the real suite: front laser 240 deg / 60 m, rear
laser 180 deg / 60 m, lidar 12 deg / 200 m front and rear, front radar
40 deg / 150 m, and the rear radar cluster (center beam plus two wide
blind-spot wedges).  Visible object outlines are sampled into sensor
objects; noise adds position jitter, GPS drift on the ego and dropouts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..fusion import SensorKind, SensorObject
from ..geometry import EgoState, normalize_angle
from .scenario import NoiseConfig
from .world import SimulatorObject, WorldModel


@dataclass(frozen=True)
class Wedge:
    center: float            # bearing relative to vehicle heading, rad
    fov: float               # full opening angle, rad
    range: float             # meters


SENSOR_WEDGES: dict[SensorKind, tuple[Wedge, ...]] = {
    SensorKind.LASERFront: (Wedge(0.0, math.radians(240), 60.0),),
    SensorKind.LASERRear: (Wedge(math.pi, math.radians(180), 60.0),),
    SensorKind.LIDARFront: (Wedge(0.0, math.radians(12), 200.0),),
    SensorKind.LIDARRear: (Wedge(math.pi, math.radians(12), 200.0),),
    SensorKind.RADARFront: (Wedge(0.0, math.radians(40), 150.0),),
    SensorKind.RADARRearCluster: (Wedge(math.pi, math.radians(40), 150.0),
                                  Wedge(math.pi - 1.2, math.radians(140), 15.0),
                                  Wedge(math.pi + 1.2, math.radians(140), 15.0)),
}


def _segment_blocks(p0, p1, poly_pts) -> bool:
    """True when the open segment (p0, p1) properly crosses the polygon."""
    x0, y0 = p0
    x1, y1 = p1
    n = len(poly_pts)
    for i in range(n):
        ax, ay = poly_pts[i]
        bx, by = poly_pts[(i + 1) % n]
        d1 = (x1 - x0) * (ay - y0) - (y1 - y0) * (ax - x0)
        d2 = (x1 - x0) * (by - y0) - (y1 - y0) * (bx - x0)
        d3 = (bx - ax) * (y0 - ay) - (by - ay) * (x0 - ax)
        d4 = (bx - ax) * (y1 - ay) - (by - ay) * (x1 - ax)
        if ((d1 > 1e-9 and d2 < -1e-9) or (d1 < -1e-9 and d2 > 1e-9)) and \
           ((d3 > 1e-9 and d4 < -1e-9) or (d3 < -1e-9 and d4 > 1e-9)):
            return True
    return False


def outline_samples(vertices, step: float = 2.0) -> list[tuple[float, float]]:
    """Polygon outline subdivided so long edges yield contour points too."""
    out: list[tuple[float, float]] = []
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        length = math.hypot(bx - ax, by - ay)
        pieces = max(1, int(length // step))
        for k in range(pieces):
            t = k / pieces
            out.append((ax + t * (bx - ax), ay + t * (by - ay)))
    return out


def visible_vertices(sensor_xy, target: SimulatorObject,
                     others: list[SimulatorObject],
                     sample_step: float = 2.0) -> list[tuple[float, float]]:
    """Outline sample points of the target with a clear line of sight."""
    poly = target.polygon_world().vertices
    out = []
    for v in outline_samples(poly, sample_step):
        vv = (v[0] - 1e-6 * (v[0] - sensor_xy[0]),
              v[1] - 1e-6 * (v[1] - sensor_xy[1]))
        if _segment_blocks(sensor_xy, vv, poly):
            continue
        blocked = False
        for other in others:
            if other.id == target.id:
                continue
            if _segment_blocks(sensor_xy, vv, other.polygon_world().vertices):
                blocked = True
                break
        if not blocked:
            out.append(v)
    return out


def _in_wedges(bearing: float, dist: float, wedges: tuple[Wedge, ...],
               visibility: float) -> bool:
    for w in wedges:
        half = w.fov / 2.0
        rel = normalize_angle(bearing - w.center)
        if abs(rel) <= half and dist <= min(w.range, visibility):
            return True
    return False


def synthesize_sensors(world: WorldModel, ego_state: EgoState,
                       noise: NoiseConfig, rng: np.random.Generator,
                       t: float) -> list[SensorObject]:
    """Sensor objects for every configured sensor kind, noise applied."""
    ego_obj = world.ego()
    sx, sy = ego_state.x, ego_state.y
    readings: list[SensorObject] = []
    others_all = [o for o in world.objects.values() if o.kind != "ego"]
    for kind in SensorKind:
        wedges = SENSOR_WEDGES[kind]
        for obj in sorted(others_all, key=lambda o: o.id):
            verts = visible_vertices((sx, sy), obj, others_all)
            keep = []
            for vx, vy in verts:
                dist = math.hypot(vx - sx, vy - sy)
                bearing = normalize_angle(math.atan2(vy - sy, vx - sx)
                                          - ego_state.heading)
                if _in_wedges(bearing, dist, wedges, noise.visibility):
                    keep.append((vx, vy, bearing))
            if not keep:
                continue
            if noise.dropout_p > 0 and rng.random() < noise.dropout_p:
                continue
            if kind in (SensorKind.RADARFront, SensorKind.RADARRearCluster):
                # point-shaped: nearest visible vertex
                vx, vy, _ = min(keep, key=lambda k: math.hypot(k[0] - sx, k[1] - sy))
                points = [(vx, vy)]
            elif kind in (SensorKind.LIDARFront, SensorKind.LIDARRear):
                # line-shaped: extreme bearings
                if len(keep) == 1:
                    points = [keep[0][:2]]
                else:
                    lo = min(keep, key=lambda k: k[2])
                    hi = max(keep, key=lambda k: k[2])
                    points = [lo[:2], hi[:2]]
            else:
                points = [(vx, vy) for vx, vy, _ in keep]
            pts = np.asarray(points, dtype=float)
            if noise.position_sigma > 0:
                pts = pts + rng.normal(0.0, noise.position_sigma, size=pts.shape)
            vel = obj.velocity()
            readings.append(SensorObject(
                sensor_kind=kind, object_id=obj.id, points=pts,
                velocity=(float(vel[0]), float(vel[1])), timestamp=t))
    return readings


class GpsDrift:
    """Random-walk GPS drift added to the true ego pose."""

    def __init__(self, sigma: float, rng: np.random.Generator):
        self.sigma = sigma
        self.rng = rng
        self.offset = np.zeros(2)

    def step(self) -> np.ndarray:
        if self.sigma > 0:
            self.offset = self.offset + self.rng.normal(0.0, self.sigma, size=2)
        return self.offset

    def apply(self, ego: EgoState) -> EgoState:
        if self.sigma <= 0:
            return ego
        return EgoState(ego.x + self.offset[0], ego.y + self.offset[1], ego.heading,
                        speed=ego.speed, acceleration=ego.acceleration,
                        yaw_rate=ego.yaw_rate, roll=ego.roll, pitch=ego.pitch,
                        height=ego.height, t=ego.t)


def terrain_rays(world: WorldModel, ego_state: EgoState, road_lanes,
                 off_road_height: float, n_rays: int = 60,
                 scan_ranges: tuple[float, ...] = (10.0, 20.0),
                 sensor_height: float = 1.8):
    """Ground-profile rays like the roof scanners: arcs at fixed ranges.

    Each ray ends at the terrain height: 0 on the road, the configured
    off-road height elsewhere, or the obstacle height when it hits one.
    Returns (origins (n, 3), targets (n, 3)).
    """
    from ..geometry import polyline_point_distances

    origins = []
    targets = []
    obstacles = [(o.polygon_world(), 1.5) for o in world.objects.values()
                 if o.kind == "static_obstacle"]
    angles = np.linspace(-math.radians(60), math.radians(60), n_rays // len(scan_ranges))
    for rng_m in scan_ranges:
        for a in angles:
            bearing = ego_state.heading + a
            tx = ego_state.x + rng_m * math.cos(bearing)
            ty = ego_state.y + rng_m * math.sin(bearing)
            z = off_road_height
            pt = np.asarray([[tx, ty]])
            for lane, width in road_lanes:
                if polyline_point_distances(pt, lane)[0] <= width / 2.0:
                    z = 0.0
                    break
            for poly, height in obstacles:
                from ..geometry import point_in_polygon

                if point_in_polygon((tx, ty), poly):
                    z = height
                    break
            origins.append((ego_state.x, ego_state.y, sensor_height))
            targets.append((tx, ty, z))
    return np.asarray(origins), np.asarray(targets)
