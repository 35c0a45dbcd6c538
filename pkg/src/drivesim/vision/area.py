"""Color-segmentation drivability: preprocessors, classifier, search polygon.

The classifier clusters the colors seen inside the search polygon and
scores every pixel by its distance to the nearest cluster mean, mapped to
0..127.  Four preprocessors mask out pixels (overexposure, hard shadow,
yellow markings, the vehicle's own shadow) as *unknown* so they never
poison the drivability estimate.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..geometry import Polygon2, points_in_polygon
from .image_io import rgb_to_hsv, rgb_to_yuv

DRIVABILITY_MAX = 127


@dataclass
class DrivabilityFrame:
    values: np.ndarray           # (h, w) uint8, 0..127
    known: np.ndarray            # (h, w) bool
    frame_id: int = 0

    def __post_init__(self) -> None:
        if self.values.shape != self.known.shape:
            raise ValueError("values/known shape mismatch")


@dataclass(frozen=True)
class AreaConfig:
    k: int = 3
    max_dist: float = 60.0       # full-scale color distance (YUV units)
    kmeans_iters: int = 20


def _kmeans(samples: np.ndarray, k: int, iters: int) -> np.ndarray:
    """Deterministic Lloyd iteration; centers seeded at luminance quantiles."""
    k = min(k, len(samples))
    order = np.argsort(samples[:, 0], kind="stable")
    seeds = [samples[order[int((i + 0.5) / k * len(samples))]] for i in range(k)]
    centers = np.asarray(seeds, dtype=float)
    for _ in range(iters):
        d = np.linalg.norm(samples[:, None, :] - centers[None, :, :], axis=2)
        nearest = d.argmin(axis=1)
        moved = False
        for c in range(k):
            members = samples[nearest == c]
            if len(members):
                new = members.mean(axis=0)
                if not np.allclose(new, centers[c]):
                    centers[c] = new
                    moved = True
        if not moved:
            break
    return centers


def classify_area(frame_rgb: np.ndarray, polygon: Polygon2,
                  masks: dict[str, np.ndarray] | None = None,
                  cfg: AreaConfig | None = None,
                  frame_id: int = 0) -> DrivabilityFrame:
    """Score every pixel's drivability against the in-polygon mean colors."""
    cfg = cfg or AreaConfig()
    if cfg.k < 1:
        raise ValueError("need k >= 1 clusters")
    h, w = frame_rgb.shape[:2]
    masked = np.zeros((h, w), dtype=bool)
    for m in (masks or {}).values():
        masked |= m.astype(bool)

    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    inside = points_in_polygon(
        np.stack([xx.ravel(), yy.ravel()], axis=1), polygon).reshape(h, w)
    sample_mask = inside & ~masked
    unknown_all = DrivabilityFrame(values=np.zeros((h, w), dtype=np.uint8),
                                   known=np.zeros((h, w), dtype=bool),
                                   frame_id=frame_id)
    if not sample_mask.any():
        return unknown_all

    yuv = rgb_to_yuv(frame_rgb)
    samples = yuv[sample_mask].reshape(-1, 3)
    centers = _kmeans(samples, cfg.k, cfg.kmeans_iters)
    flat = yuv.reshape(-1, 3)
    dist = np.linalg.norm(flat[:, None, :] - centers[None, :, :], axis=2).min(axis=1)
    drv = np.round(DRIVABILITY_MAX * (1.0 - np.minimum(dist / cfg.max_dist, 1.0)))
    values = drv.reshape(h, w).astype(np.uint8)
    values[masked] = 0
    return DrivabilityFrame(values=values, known=~masked, frame_id=frame_id)


@dataclass(frozen=True)
class PreprocessConfig:
    t_white: float = 220.0       # HSV intensity above -> overexposed
    t_black: float = 40.0        # HSV intensity below -> hard shadow
    t_yellow: float = 0.25       # score threshold after large-area subtraction
    yellow_red_slack: float = 0.10
    smooth_radius: int = 5
    dilate_radius: int = 5
    shadow_fill_tol: float = 30.0
    shadow_intensity: float = 80.0
    shadow_max_area_frac: float = 0.3
    ego_base_points: tuple[tuple[int, int], ...] = ()   # (x, y) pixels on the hood line


def _box_mean(img: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0:
        return img.astype(float)
    size = 2 * radius + 1
    padded = np.pad(img.astype(float), radius, mode="edge")
    csum = np.cumsum(np.cumsum(padded, axis=0), axis=1)
    csum = np.pad(csum, ((1, 0), (1, 0)))
    h, w = img.shape
    total = (csum[size:size + h, size:size + w] - csum[:h, size:size + w]
             - csum[size:size + h, :w] + csum[:h, :w])
    return total / (size * size)


def _dilate(img: np.ndarray, radius: int) -> np.ndarray:
    out = img.astype(float)
    for _ in range(radius):
        shifted = [out]
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                shifted.append(np.roll(np.roll(out, dy, axis=0), dx, axis=1))
        out = np.maximum.reduce(shifted)
    return out


def preprocess_masks(frame_rgb: np.ndarray,
                     cfg: PreprocessConfig | None = None) -> dict[str, np.ndarray]:
    """The four bit masks: white, black, yellow, egoShadow."""
    cfg = cfg or PreprocessConfig()
    hsv = rgb_to_hsv(frame_rgb)
    intensity = hsv[..., 2].astype(float)
    white = intensity > cfg.t_white
    black = intensity < cfg.t_black

    r = frame_rgb[..., 0].astype(float)
    g = frame_rgb[..., 1].astype(float)
    b = frame_rgb[..., 2].astype(float)
    candidate = (g > b) & (g >= (1.0 - cfg.yellow_red_slack) * r) & (r <= b + g)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(candidate & (b > 0), np.minimum(r, g) / np.maximum(b, 1.0) - 1.0, 0.0)
    score = np.clip(score, 0.0, 4.0)
    # suppress large areas: subtract the dilated smoothed copy
    background = _dilate(_box_mean(score, cfg.smooth_radius), cfg.dilate_radius)
    yellow = (score - background * (score > 0)) > cfg.t_yellow
    # keep plain strong responses that the subtraction fully removed only
    # when they are not part of a large region
    yellow &= candidate

    ego_shadow = np.zeros(frame_rgb.shape[:2], dtype=bool)
    if cfg.ego_base_points:
        ego_shadow = _flood_ego_shadow(frame_rgb, intensity, cfg)
    return {"white": white, "black": black, "yellow": yellow, "egoShadow": ego_shadow}


def _flood_ego_shadow(frame_rgb, intensity, cfg: PreprocessConfig) -> np.ndarray:
    h, w = intensity.shape
    base = [(int(x), int(y)) for x, y in cfg.ego_base_points if 0 <= x < w and 0 <= y < h]
    if not base:
        return np.zeros((h, w), dtype=bool)
    y_max = max(y for _, y in base)
    seed_colors = np.array([frame_rgb[y, x] for x, y in base], dtype=float)
    seed = seed_colors.mean(axis=0)
    visited = np.zeros((h, w), dtype=bool)
    queue = deque()
    for x, y in base:
        if not visited[y, x]:
            visited[y, x] = True
            queue.append((x, y))
    rgb = frame_rgb.astype(float)
    filled = []
    while queue:
        x, y = queue.popleft()
        if np.abs(rgb[y, x] - seed).max() > cfg.shadow_fill_tol:
            continue
        filled.append((x, y))
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if 0 <= nx < w and 0 <= ny <= y_max and not visited[ny, nx]:
                visited[ny, nx] = True
                queue.append((nx, ny))
    if not filled:
        return np.zeros((h, w), dtype=bool)
    mask = np.zeros((h, w), dtype=bool)
    xs, ys = zip(*filled)
    mask[list(ys), list(xs)] = True
    mask &= intensity < cfg.shadow_intensity
    if mask.sum() > cfg.shadow_max_area_frac * h * w:
        return np.zeros((h, w), dtype=bool)
    return mask


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


@dataclass
class PolygonAdvance:
    search: Polygon2
    bumper: Polygon2
    x_moment: int
    y_moment: int


def advance_search_polygon(prev_grid: DrivabilityFrame, bumper: Polygon2,
                           boundary: Polygon2, search: Polygon2,
                           threshold: int = 64) -> PolygonAdvance:
    """Move the search/bumper polygons toward the drivable pixel mass.

    Moments are the mean offsets (rounded to integers) of above-threshold
    pixels inside the bumper, measured from the bumper midpoint; zero
    moments are nudged +-1 toward the boundary center so the polygon never
    sticks to a corner; the translation is clamped so both polygons stay
    inside the boundary's bounding box.
    """
    h, w = prev_grid.values.shape
    bx_min, by_min, bx_max, by_max = (int(v) for v in bumper.bounds())
    bx_min, by_min = max(bx_min, 0), max(by_min, 0)
    bx_max, by_max = min(bx_max, w - 1), min(by_max, h - 1)
    mid_x, mid_y = bumper.centroid()

    pixel_sum = 0
    wsum_x = 0.0
    wsum_y = 0.0
    if bx_max >= bx_min and by_max >= by_min:
        yy, xx = np.meshgrid(np.arange(by_min, by_max + 1),
                             np.arange(bx_min, bx_max + 1), indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
        inside = points_in_polygon(pts, bumper)
        pixel_sum = int(inside.sum())
        if pixel_sum:
            sub = prev_grid.values[by_min:by_max + 1, bx_min:bx_max + 1].ravel()
            known = prev_grid.known[by_min:by_max + 1, bx_min:bx_max + 1].ravel()
            drivable = inside & known & (sub > threshold)
            wsum_x = float((pts[drivable, 0] - mid_x).sum())
            wsum_y = float((pts[drivable, 1] - mid_y).sum())

    if pixel_sum:
        x_moment = _round_half_away(wsum_x / pixel_sum)
        y_moment = _round_half_away(wsum_y / pixel_sum)
    else:
        x_moment = y_moment = 0

    cx, cy = boundary.centroid()
    if x_moment == 0:
        x_moment = 1 if mid_x < cx else -1
    if y_moment == 0:
        y_moment = 1 if mid_y < cy else -1

    # clamp: both polygons must stay within the boundary bounding box
    gx_min, gy_min, gx_max, gy_max = boundary.bounds()
    for poly in (search, bumper):
        px_min, py_min, px_max, py_max = poly.bounds()
        x_moment = max(x_moment, int(math.ceil(gx_min - px_min)))
        x_moment = min(x_moment, int(math.floor(gx_max - px_max)))
        y_moment = max(y_moment, int(math.ceil(gy_min - py_min)))
        y_moment = min(y_moment, int(math.floor(gy_max - py_max)))

    return PolygonAdvance(
        search=search.translated(x_moment, y_moment),
        bumper=bumper.translated(x_moment, y_moment),
        x_moment=x_moment,
        y_moment=y_moment,
    )
