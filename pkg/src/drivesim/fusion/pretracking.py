"""Pretracking: provisional constant-velocity tracks gathering evidence.

Sensor objects that fail stage-one association against all live tracks
land here.  Each pretrack runs a small constant-velocity Kalman filter,
carries a vector of per-sensor assignments and an update counter; once
the counter reaches the activation threshold (from the redundancy rules
or the default), a real track is instantiated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .objects import SensorKind, SensorObject, Track, TrackModel, new_track
from .rules import RedundancyRule, activation_threshold


@dataclass
class Pretrack:
    id: int
    state: np.ndarray               # (x, y, vx, vy)
    P: np.ndarray                   # 4x4
    assignments: dict[SensorKind, int] = field(default_factory=dict)
    update_count: int = 1
    last_update: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return self.state[:2]

    @property
    def velocity(self) -> np.ndarray:
        return self.state[2:]


@dataclass(frozen=True)
class PretrackConfig:
    a: float = 1.0                   # weight per meter (as in stage-one association)
    b: float = 0.5                   # weight per m/s
    gate: float = 4.0
    q: float = 0.5                   # process noise density
    r_pos: float = 0.2
    promote_speed: float = 2.0       # activate as 6D above this speed
    init_pos_var: float = 1.0
    init_vel_var: float = 4.0


def _cv_predict(p: Pretrack, dt: float, cfg: PretrackConfig) -> None:
    F = np.eye(4)
    F[0, 2] = dt
    F[1, 3] = dt
    p.state = F @ p.state
    Q = np.diag([0.25 * dt ** 4, 0.25 * dt ** 4, dt ** 2, dt ** 2]) * cfg.q
    p.P = F @ p.P @ F.T + Q


def _cv_update(p: Pretrack, z: np.ndarray, cfg: PretrackConfig) -> None:
    H = np.zeros((2, 4))
    H[0, 0] = H[1, 1] = 1.0
    S = H @ p.P @ H.T + np.eye(2) * cfg.r_pos
    K = p.P @ H.T @ np.linalg.inv(S)
    p.state = p.state + K @ (z - H @ p.state)
    p.P = (np.eye(4) - K @ H) @ p.P


@dataclass
class IngestResult:
    pretracks: list[Pretrack]
    activated: Track | None = None


def pretrack_ingest(pretracks: list[Pretrack], obj: SensorObject,
                    rules: list[RedundancyRule], default_threshold: int,
                    cfg: PretrackConfig | None = None,
                    next_ids: "callable" = None) -> IngestResult:
    """Associate an unmatched sensor object with the pretrack set.

    Returns the updated pretrack list and, when the activation threshold
    is reached, the newly instantiated track (removed from the set).
    ``next_ids`` allocates ids for new pretracks/tracks.
    """
    cfg = cfg or PretrackConfig()
    next_ids = next_ids or iter(range(10 ** 9)).__next__
    centroid = obj.centroid
    best = None
    best_w = cfg.gate
    for p in pretracks:
        d = math.hypot(centroid[0] - p.state[0], centroid[1] - p.state[1])
        dv = math.hypot(obj.velocity[0] - p.state[2], obj.velocity[1] - p.state[3])
        w = cfg.a * d + cfg.b * dv
        if w < best_w:
            best, best_w = p, w

    if best is None:
        best = Pretrack(
            id=next_ids(),
            state=np.array([centroid[0], centroid[1], obj.velocity[0], obj.velocity[1]]),
            P=np.diag([cfg.init_pos_var, cfg.init_pos_var,
                       cfg.init_vel_var, cfg.init_vel_var]).astype(float),
            assignments={obj.sensor_kind: obj.object_id},
            update_count=1,
            last_update=obj.timestamp,
        )
        pretracks = pretracks + [best]
    else:
        dt = obj.timestamp - best.last_update
        if dt > 0:
            _cv_predict(best, dt, cfg)
        _cv_update(best, centroid, cfg)
        best.assignments[obj.sensor_kind] = obj.object_id
        best.update_count += 1
        best.last_update = obj.timestamp

    present = frozenset(k.value for k in best.assignments)
    threshold = activation_threshold(rules, best.position, present, default_threshold)
    if best.update_count >= threshold:
        pretracks = [p for p in pretracks if p.id is not best.id]
        speed = float(np.hypot(*best.velocity))
        course = math.atan2(best.velocity[1], best.velocity[0]) if speed > 1e-6 else 0.0
        model = TrackModel.SixD if speed > cfg.promote_speed else TrackModel.FourD
        track = new_track(next_ids(), model, obj.points, v=speed, course=course,
                          t=obj.timestamp)
        return IngestResult(pretracks=pretracks, activated=track)
    return IngestResult(pretracks=pretracks)


def prune_pretracks(pretracks: list[Pretrack], now: float, ttl: float) -> list[Pretrack]:
    return [p for p in pretracks if now - p.last_update <= ttl]
