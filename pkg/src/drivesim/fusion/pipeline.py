"""Track database maintenance and the sequential fusion pipeline."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .association import association_weight, match_contours, pairwise_distances
from .ekf import NoiseConfig, predict, update
from .objects import (
    SensorObject,
    Track,
    TrackDelta,
    TrackModel,
    emit_deltas,
    track_payload,
)
from .pretracking import Pretrack, PretrackConfig, pretrack_ingest, prune_pretracks
from .rules import RedundancyRule
from .splitting import split_track


@dataclass
class FusionConfig:
    a: float = 1.0                   # association weight per meter
    b: float = 0.5                   # association weight per m/s
    gate: float = 4.0                # stage-one threshold
    new_point_gate: float = 2.0      # stage-two distance beyond which points are appended
    default_activation: int = 3
    pretrack_ttl: float = 2.0
    track_ttl: float = 0.5
    point_ttl: float = 2.0
    merge_dist: float = 0.5
    merge_vel: float = 1.0
    promote_speed: float = 2.0
    promote_cycles: int = 3
    demote_speed: float = 1.0
    demote_cycles: int = 10
    split_cell: float = 0.25
    split_margin: float = 1.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    pretrack: PretrackConfig = field(default_factory=PretrackConfig)


def _promote(track: Track) -> None:
    P = np.zeros((6, 6))
    P[:4, :4] = track.P
    P[4, 4] = 0.5
    P[5, 5] = 0.5
    track.model = TrackModel.SixD
    track.P = P
    track.omega = 0.0


def _demote(track: Track) -> None:
    track.model = TrackModel.FourD
    track.P = track.P[:4, :4].copy()
    track.omega = 0.0


def _merge_pair(keep: Track, other: Track) -> None:
    keep.points = np.vstack([keep.points, other.points])
    keep.point_update_t = np.concatenate([keep.point_update_t, other.point_update_t])
    keep.point_update_count = np.concatenate([keep.point_update_count,
                                              other.point_update_count])
    keep.last_track_update = max(keep.last_track_update, other.last_track_update)


def maintain_tracks(db: dict[int, Track], now: float, cfg: FusionConfig,
                    recent_objects: dict[int, list[SensorObject]] | None = None,
                    id_alloc=None) -> dict[int, Track]:
    """Garbage-collect, split, merge and model-switch the track database."""
    recent_objects = recent_objects or {}
    out: dict[int, Track] = {}

    for tid, track in db.items():
        # dead-track collection
        if now - track.last_track_update > cfg.track_ttl:
            continue
        t = track.copy()
        # stale contour point collection (never below one point)
        stale = now - t.point_update_t > cfg.point_ttl
        if stale.all():
            freshest = int(np.argmax(t.point_update_t))
            stale[freshest] = False
        if stale.any():
            keep = ~stale
            t.points = t.points[keep]
            t.point_update_t = t.point_update_t[keep]
            t.point_update_count = t.point_update_count[keep]
        out[tid] = t

    # splitting on recent raw evidence
    split_out: dict[int, Track] = {}
    for tid, track in out.items():
        for piece in split_track(track, recent_objects.get(tid, []),
                                 cell=cfg.split_cell, margin=cfg.split_margin,
                                 id_alloc=id_alloc):
            split_out[piece.id] = piece
    out = split_out

    # merging: keep the older (smaller) id
    ids = sorted(out)
    merged: set[int] = set()
    for i, tid in enumerate(ids):
        if tid in merged:
            continue
        keep = out[tid]
        for other_id in ids[i + 1:]:
            if other_id in merged:
                continue
            other = out[other_id]
            dmin = pairwise_distances(keep.points, other.points).min()
            kv, ov = keep.velocity, other.velocity
            dv = math.hypot(kv[0] - ov[0], kv[1] - ov[1])
            if dmin < cfg.merge_dist and dv < cfg.merge_vel:
                _merge_pair(keep, other)
                merged.add(other_id)
    for tid in merged:
        del out[tid]

    # model switching with hysteresis
    for track in out.values():
        speed = abs(track.v)
        track.fast_cycles = track.fast_cycles + 1 if speed > cfg.promote_speed else 0
        track.slow_cycles = track.slow_cycles + 1 if speed < cfg.demote_speed else 0
        if track.model is TrackModel.FourD and track.fast_cycles >= cfg.promote_cycles:
            _promote(track)
            track.fast_cycles = 0
        elif track.model is TrackModel.SixD and track.slow_cycles >= cfg.demote_cycles:
            _demote(track)
            track.slow_cycles = 0
    return out


class FusionPipeline:
    """One fusion instance: FIFO measurement queue over a track database.

    Sensor data is queued and processed strictly in arrival order.  Front
    and rear instances run independently and publish to one delta bus.
    """

    def __init__(self, cfg: FusionConfig | None = None,
                 rules: list[RedundancyRule] | None = None,
                 name: str = "front", id_start: int = 1):
        self.cfg = cfg or FusionConfig()
        self.rules = rules or []
        self.name = name
        self.tracks: dict[int, Track] = {}
        self.pretracks: list[Pretrack] = []
        self.queue: deque[SensorObject] = deque()
        self.recent_objects: dict[int, list[SensorObject]] = {}
        self._ids = itertools.count(id_start)
        self._last_maintain = 0.0
        self.diagnostics: list[str] = []

    def next_id(self) -> int:
        return next(self._ids)

    def enqueue(self, obj: SensorObject) -> None:
        self.queue.append(obj)

    def payload_snapshot(self) -> dict[int, dict]:
        return {tid: track_payload(t) for tid, t in self.tracks.items()}

    def _process_one(self, obj: SensorObject) -> None:
        best_id, best_w = None, self.cfg.gate
        for tid, track in self.tracks.items():
            w = association_weight(track, obj, self.cfg.a, self.cfg.b)
            if w < best_w:
                best_id, best_w = tid, w
        if best_id is None:
            res = pretrack_ingest(self.pretracks, obj, self.rules,
                                  self.cfg.default_activation,
                                  self.cfg.pretrack, self.next_id)
            self.pretracks = res.pretracks
            if res.activated is not None:
                self.tracks[res.activated.id] = res.activated
                self.recent_objects[res.activated.id] = [obj]
            return
        track = self.tracks[best_id]
        dt = obj.timestamp - track.last_track_update
        if dt > 0:
            track = predict(track, dt, self.cfg.noise)
        pairs = match_contours(track.points, obj.points)
        result = update(track, obj, pairs, self.cfg.noise, self.cfg.new_point_gate)
        if result.skipped:
            self.diagnostics.append(
                f"{self.name}: singular innovation covariance on track {best_id}")
        self.tracks[best_id] = result.track
        self.recent_objects.setdefault(best_id, []).append(obj)

    def process_pending(self, now: float) -> list[TrackDelta]:
        """Drain the FIFO queue, maintain the database, return the delta batch."""
        before = self.payload_snapshot()
        while self.queue:
            self._process_one(self.queue.popleft())
        self.tracks = maintain_tracks(self.tracks, now, self.cfg,
                                      self.recent_objects, self.next_id)
        self.pretracks = prune_pretracks(self.pretracks, now, self.cfg.pretrack_ttl)
        self.recent_objects = {tid: [] for tid in self.tracks}
        return emit_deltas(before, self.payload_snapshot())
