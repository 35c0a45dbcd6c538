"""Track and sensor-object value types for the object fusion pipeline."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

PSD_TOL = 1e-9


class SensorKind(enum.Enum):
    LASERFront = "LASERFront"
    LASERRear = "LASERRear"
    LIDARFront = "LIDARFront"
    LIDARRear = "LIDARRear"
    RADARFront = "RADARFront"
    RADARRearCluster = "RADARRearCluster"


class TrackModel(enum.Enum):
    FourD = "4D"
    SixD = "6D"


@dataclass(frozen=True)
class SensorObject:
    """One object-level reading: contour points plus a velocity vector."""

    sensor_kind: SensorKind
    object_id: int
    points: np.ndarray            # (m, 2) global frame, meters
    velocity: tuple[float, float]
    timestamp: float

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0 or pts.shape[1] != 2:
            raise ValueError("sensor object needs at least one 2D contour point")
        m = len(pts)
        if self.sensor_kind in (SensorKind.RADARFront, SensorKind.RADARRearCluster) and m != 1:
            raise ValueError("radar objects are point-shaped (m = 1)")
        if self.sensor_kind in (SensorKind.LIDARFront, SensorKind.LIDARRear) and m > 2:
            raise ValueError("lidar objects are line-shaped (m <= 2)")
        object.__setattr__(self, "points", pts)

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)


@dataclass
class Track:
    """Multi-contour-point object estimate with one shared motion state.

    All contour points share v, a and (in the 6D model) course alpha and
    course rate omega, plus one common covariance P over the per-point
    state (x, y, v, a[, alpha, omega]).  4D tracks move along a frozen
    course that is not part of the estimated state.
    """

    id: int
    model: TrackModel
    points: np.ndarray              # (n, 2)
    v: float
    a: float
    alpha: float                    # course (6D state entry; frozen course for 4D)
    omega: float                    # course rate (6D only)
    P: np.ndarray                   # (4,4) or (6,6)
    point_update_t: np.ndarray      # (n,)
    point_update_count: np.ndarray  # (n,) int64
    last_track_update: float
    fast_cycles: int = 0
    slow_cycles: int = 0

    def __post_init__(self) -> None:
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if len(self.points) < 1:
            raise ValueError("track needs at least one contour point")
        dim = 6 if self.model is TrackModel.SixD else 4
        P = np.asarray(self.P, dtype=float)
        if P.shape != (dim, dim):
            raise ValueError(f"covariance must be {dim}x{dim} for {self.model}")
        if not np.allclose(P, P.T, atol=PSD_TOL):
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(P).min() < -PSD_TOL:
            raise ValueError("covariance must be positive semi-definite")
        self.P = P
        self.point_update_t = np.asarray(self.point_update_t, dtype=float)
        self.point_update_count = np.asarray(self.point_update_count, dtype=np.int64)

    @property
    def state_dim(self) -> int:
        return 6 if self.model is TrackModel.SixD else 4

    @property
    def course(self) -> float:
        return self.alpha

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.v * math.cos(self.alpha), self.v * math.sin(self.alpha))

    def copy(self) -> "Track":
        return replace(
            self,
            points=self.points.copy(),
            P=self.P.copy(),
            point_update_t=self.point_update_t.copy(),
            point_update_count=self.point_update_count.copy(),
        )


def new_track(track_id: int, model: TrackModel, points, v: float, course: float,
              t: float, a: float = 0.0, omega: float = 0.0,
              pos_var: float = 0.5, vel_var: float = 1.0) -> Track:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dim = 6 if model is TrackModel.SixD else 4
    diag = [pos_var, pos_var, vel_var, vel_var] + ([0.5, 0.5] if dim == 6 else [])
    return Track(
        id=track_id, model=model, points=pts, v=v, a=a, alpha=course,
        omega=omega, P=np.diag(diag).astype(float),
        point_update_t=np.full(len(pts), t), point_update_count=np.ones(len(pts), dtype=np.int64),
        last_track_update=t,
    )


# ----------------------------------------------------------------- deltas


@dataclass(frozen=True)
class TrackDelta:
    op: str                      # create | update | delete
    track_id: int
    payload: dict | None = None  # full wire payload for create/update

    def __post_init__(self) -> None:
        if self.op not in ("create", "update", "delete"):
            raise ValueError(f"unknown delta op: {self.op}")
        if self.op == "delete" and self.payload is not None:
            raise ValueError("delete deltas carry no payload")
        if self.op != "delete" and self.payload is None:
            raise ValueError(f"{self.op} delta needs a payload")


def track_payload(track: Track) -> dict:
    """Wire representation of a track (newline-delimited JSON record body)."""
    payload = {
        "id": track.id,
        "model": track.model.value,
        "contour": [[float(x), float(y)] for x, y in track.points],
        "v": float(track.v),
        "a": float(track.a),
        "t": float(track.last_track_update),
    }
    if track.model is TrackModel.SixD:
        payload["alpha"] = float(track.alpha)
        payload["omega"] = float(track.omega)
    return payload


def delta_to_json(delta: TrackDelta) -> str:
    rec: dict = {"op": delta.op, "id": delta.track_id}
    if delta.payload is not None:
        rec.update({k: v for k, v in delta.payload.items() if k != "id"})
    return json.dumps(rec, separators=(",", ":"))


def delta_from_json(line: str) -> TrackDelta:
    rec = json.loads(line)
    op = rec.pop("op")
    track_id = rec.pop("id")
    payload = None
    if op != "delete":
        payload = {"id": track_id, **rec}
    return TrackDelta(op=op, track_id=track_id, payload=payload)


def emit_deltas(before: dict[int, dict], after: dict[int, dict]) -> list[TrackDelta]:
    """Minimal create/update/delete set transforming one payload map into another."""
    deltas: list[TrackDelta] = []
    for tid in sorted(before.keys() - after.keys()):
        deltas.append(TrackDelta("delete", tid))
    for tid in sorted(after.keys() - before.keys()):
        deltas.append(TrackDelta("create", tid, after[tid]))
    for tid in sorted(after.keys() & before.keys()):
        if after[tid] != before[tid]:
            deltas.append(TrackDelta("update", tid, after[tid]))
    return deltas


class DeltaProtocolError(Exception):
    pass


def apply_deltas(db: dict[int, dict], deltas: Sequence[TrackDelta]) -> dict[int, dict]:
    """Replay deltas onto a client-side payload database."""
    out = dict(db)
    for d in deltas:
        if d.op == "create":
            if d.track_id in out:
                raise DeltaProtocolError(f"duplicate create for track {d.track_id}")
            out[d.track_id] = d.payload
        elif d.op == "update":
            if d.track_id not in out:
                raise DeltaProtocolError(f"update of unknown track {d.track_id}")
            out[d.track_id] = d.payload
        else:
            if d.track_id not in out:
                raise DeltaProtocolError(f"delete of unknown track {d.track_id}")
            del out[d.track_id]
    return out
