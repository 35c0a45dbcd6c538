"""Chained-segment lane model and its RANSAC estimator.

Segments carry a fixed length, an estimated width and the heading change
against the previous segment; the full pose chain is derivable from the
anchor and the (length, heading change) pairs alone.  Features are binned
into the four marking regions (outer left, left, right, outer right)
around the running model guess and each segment is fitted front to back.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import EgoState, Pose2, normalize_angle
from .lane_features import LaneFeature

REGIONS = ("outer_left", "left", "right", "outer_right")
_REGION_OFFSETS = {"outer_left": 1.5, "left": 0.5, "right": -0.5, "outer_right": -1.5}


@dataclass(frozen=True)
class LaneSegment:
    length: float
    width: float
    d: float                     # heading change vs the previous segment
    quality: float
    marks_left: bool = True
    marks_right: bool = True
    adjacent_left: bool = False
    adjacent_right: bool = False
    color_left: str = "undecided"
    color_right: str = "undecided"


@dataclass
class LaneModel:
    anchor: Pose2
    segments: list[LaneSegment] = field(default_factory=list)
    valid: bool = False

    def poses(self) -> list[Pose2]:
        """Segment start poses chained from the anchor (one per segment + end)."""
        out = [Pose2(self.anchor.x, self.anchor.y, self.anchor.heading)]
        heading = self.anchor.heading
        x, y = self.anchor.x, self.anchor.y
        for seg in self.segments:
            heading = normalize_angle(heading + seg.d)
            x += seg.length * math.cos(heading)
            y += seg.length * math.sin(heading)
            out.append(Pose2(x, y, heading))
        return out

    def centerline(self, step: float = 1.0) -> np.ndarray:
        """Sampled centerline points in world coordinates."""
        pts = []
        poses = self.poses()
        for a, b in zip(poses[:-1], poses[1:]):
            seg_len = math.hypot(b.x - a.x, b.y - a.y)
            n = max(1, int(seg_len / step))
            for i in range(n):
                t = i / n
                pts.append((a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)))
        if poses:
            pts.append((poses[-1].x, poses[-1].y))
        return np.asarray(pts, dtype=float)

    def to_json(self) -> str:
        return json.dumps({
            "valid": self.valid,
            "c0": {"x": self.anchor.x, "y": self.anchor.y, "heading": self.anchor.heading},
            "segments": [
                {"l": s.length, "w": s.width, "d": s.d, "quality": s.quality,
                 "flags": {"marks_left": s.marks_left, "marks_right": s.marks_right,
                           "adjacent_left": s.adjacent_left,
                           "adjacent_right": s.adjacent_right},
                 "colors": {"left": s.color_left, "right": s.color_right}}
                for s in self.segments
            ],
        }, separators=(",", ":"))


@dataclass(frozen=True)
class LaneFitConfig:
    n_ransac: int = 50
    inlier_tol: float = 0.15     # meters
    t_q: float = 0.5
    segment_length: float = 5.0
    l_gap: float = 1.0
    lane_width: float = 4.0      # initial guess
    w_min: float = 2.0
    w_max: float = 6.0
    max_segments: int = 6
    region_halfwidth_factor: float = 0.35
    adjacent_quality: float = 0.25
    max_slope: float = 0.6


def _label_features(local_xy: np.ndarray, width: float, cfg: LaneFitConfig):
    """Region label per feature from its lateral offset, None when too far."""
    labels = []
    for _, y in local_xy:
        best, best_err = None, cfg.region_halfwidth_factor * width
        for region, factor in _REGION_OFFSETS.items():
            err = abs(y - factor * width)
            if err < best_err:
                best, best_err = region, err
        labels.append(best)
    return labels


def fit_lane_model(features: list[LaneFeature], prev: LaneModel | None,
                   ego: EgoState, cfg: LaneFitConfig | None = None,
                   rng: np.random.Generator | None = None) -> LaneModel:
    """Estimate the lane model from world-frame features.

    Falls back to an invalid model anchored at the ego pose when the first
    segment cannot be established; the caller keeps the previous model as
    region-of-interest guess in that case.
    """
    cfg = cfg or LaneFitConfig()
    rng = rng or np.random.default_rng(0)
    anchor = Pose2(ego.x, ego.y, ego.heading)
    guess_poses = prev.poses() if (prev is not None and prev.valid) else None

    pts = np.asarray([f.position_world for f in features], dtype=float).reshape(-1, 2)
    weights = np.asarray([f.weight for f in features], dtype=float)
    colors = [f.color for f in features]

    segments: list[LaneSegment] = []
    x0, y0, heading_prev = anchor.x, anchor.y, anchor.heading
    width = cfg.lane_width
    for i in range(cfg.max_segments):
        if guess_poses is not None and i + 1 < len(guess_poses):
            alpha_guess = guess_poses[i + 1].heading
        elif segments:
            alpha_guess = heading_prev
        else:
            alpha_guess = anchor.heading
        c, s = math.cos(alpha_guess), math.sin(alpha_guess)
        if len(pts):
            rel = pts - (x0, y0)
            local = np.stack([c * rel[:, 0] + s * rel[:, 1],
                              -s * rel[:, 0] + c * rel[:, 1]], axis=1)
            in_window = ((local[:, 0] >= -cfg.l_gap)
                         & (local[:, 0] <= cfg.segment_length + cfg.l_gap)
                         & (np.abs(local[:, 1]) <= 2.0 * width))
        else:
            local = np.zeros((0, 2))
            in_window = np.zeros(0, dtype=bool)
        idx = np.flatnonzero(in_window)
        labels_all = _label_features(local[idx], width, cfg)
        keep = [(j, lab) for j, lab in zip(idx, labels_all) if lab is not None]
        if len(keep) < 2:
            break
        sel = np.array([j for j, _ in keep])
        sel_labels = [lab for _, lab in keep]
        offsets = np.array([_REGION_OFFSETS[lab] for lab in sel_labels])
        lx, ly = local[sel, 0], local[sel, 1]
        w_feat = weights[sel]

        best = None
        for _ in range(cfg.n_ransac):
            a_i, b_i = rng.integers(0, len(sel), size=2)
            if a_i == b_i:
                continue
            o1, o2 = offsets[a_i], offsets[b_i]
            x1, x2 = lx[a_i], lx[b_i]
            y1, y2 = ly[a_i], ly[b_i]
            det = x1 * o2 - x2 * o1
            if abs(det) < 1e-9:
                if o1 == o2:
                    if abs(x1 - x2) < 1e-9:
                        continue
                    g = (y1 - y2) / (x1 - x2)
                    w = (y1 - g * x1) / o1
                else:
                    continue
            else:
                g = (y1 * o2 - y2 * o1) / det
                w = (x1 * y2 - x2 * y1) / det
            if not (cfg.w_min <= w <= cfg.w_max) or abs(g) > cfg.max_slope:
                continue
            resid = np.abs(ly - (g * lx + offsets * w))
            inliers = resid < cfg.inlier_tol
            score = float(w_feat[inliers].sum())
            if best is None or score > best[0]:
                best = (score, g, w, inliers)
        if best is None:
            break
        _, g, w, inliers = best
        # least-squares refinement over the winning inlier set
        if inliers.sum() >= 2:
            A = np.stack([lx[inliers], offsets[inliers]], axis=1)
            rhs = ly[inliers]
            sw = np.sqrt(w_feat[inliers])
            sol, *_ = np.linalg.lstsq(A * sw[:, None], rhs * sw, rcond=None)
            g_ref, w_ref = float(sol[0]), float(sol[1])
            if cfg.w_min <= w_ref <= cfg.w_max and abs(g_ref) <= cfg.max_slope:
                g, w = g_ref, w_ref
                inliers = np.abs(ly - (g * lx + offsets * w)) < cfg.inlier_tol

        # quality per region: weighted inlier ratio, damped for tiny support
        region_quality = {}
        for region in REGIONS:
            mask = np.array([lab == region for lab in sel_labels])
            total = float(w_feat[mask].sum())
            got = float(w_feat[mask & inliers].sum())
            n_in = int((mask & inliers).sum())
            region_quality[region] = (got / total if total > 0 else 0.0) * min(1.0, n_in / 4.0)
        if max(region_quality.values()) <= cfg.t_q:
            break

        def region_color(region):
            mask = np.array([lab == region for lab in sel_labels]) & inliers
            votes = [colors[sel[j]] for j in np.flatnonzero(mask)]
            named = [v for v in votes if v != "undecided"]
            if not named:
                return "undecided"
            return max(set(named), key=named.count)

        alpha_i = normalize_angle(alpha_guess + math.atan(g))
        seg = LaneSegment(
            length=cfg.segment_length,
            width=float(w),
            d=normalize_angle(alpha_i - heading_prev),
            quality=float(max(region_quality.values())),
            marks_left=region_quality["left"] > cfg.adjacent_quality,
            marks_right=region_quality["right"] > cfg.adjacent_quality,
            adjacent_left=region_quality["outer_left"] > cfg.adjacent_quality,
            adjacent_right=region_quality["outer_right"] > cfg.adjacent_quality,
            color_left=region_color("left"),
            color_right=region_color("right"),
        )
        segments.append(seg)
        width = float(w)
        heading_prev = alpha_i
        x0 += cfg.segment_length * math.cos(alpha_i)
        y0 += cfg.segment_length * math.sin(alpha_i)

    return LaneModel(anchor=anchor, segments=segments, valid=bool(segments))


class LanePipeline:
    """Per-frame lane detection state: feature aging and model feedback."""

    def __init__(self, cfg: LaneFitConfig | None = None,
                 feature_ttl: float = 1.0, aged_weight: float = 0.5,
                 sparse_threshold: int = 12, seed: int = 0):
        self.cfg = cfg or LaneFitConfig()
        self.feature_ttl = feature_ttl
        self.aged_weight = aged_weight
        self.sparse_threshold = sparse_threshold
        self.model: LaneModel | None = None
        self._history: list[tuple[float, LaneFeature]] = []
        self._rng = np.random.default_rng(seed)

    def step(self, features: list[LaneFeature], ego: EgoState, t: float) -> LaneModel:
        self._history = [(ts, f) for ts, f in self._history if t - ts <= self.feature_ttl]
        mixed = list(features)
        if len(features) < self.sparse_threshold:
            for _, f in self._history:
                mixed.append(LaneFeature(
                    block=f.block, quality=f.quality, direction=f.direction,
                    color=f.color, position_car=f.position_car,
                    position_world=f.position_world, weight=self.aged_weight))
        model = fit_lane_model(mixed, self.model, ego, self.cfg, self._rng)
        self._history.extend((t, f) for f in features)
        if model.valid:
            self.model = model
        return model if model.valid else (self.model or model)
