"""Lane marking feature detection over 8x8 top-view patches.

Each block (about 25 x 25 cm of road) passes three gates per channel:
local contrast, separation of the two dominant histogram bins, and
directedness of the bright-bin pixels under trial rotations.  The
lightness channel yields white candidates, the saturation channel yellow
ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import EgoState, ego_to_world
from .topview import TopViewImage

BLOCK = 8
DIRECTIONS = tuple(i * 22.5 for i in range(8))


@dataclass(frozen=True)
class FeatureThresholds:
    t_con: float = 30.0    # local contrast (8-bit)
    t_hist: float = 25.0   # dominant histogram bin distance (8-bit)
    t_dir: float = 2.0     # variance ratio for directedness
    t_col: float = 20.0    # channel quality needed to claim a color
    n_bins: int = 8
    supersample: int = 2


@dataclass(frozen=True)
class LaneFeature:
    block: tuple[int, int]           # (block row, block col)
    quality: float
    direction: float                 # degrees, one of DIRECTIONS
    color: str                       # white | yellow | undecided
    position_car: tuple[float, float]
    position_world: tuple[float, float]
    weight: float = 1.0


def _supersample(block: np.ndarray, factor: int) -> np.ndarray:
    """Bilinear upscale (factor x) of one block."""
    if factor <= 1:
        return block.astype(float)
    h, w = block.shape
    yi = (np.arange(h * factor) + 0.5) / factor - 0.5
    xi = (np.arange(w * factor) + 0.5) / factor - 0.5
    y0 = np.clip(np.floor(yi).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xi).astype(int), 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    fy = np.clip(yi - y0, 0, 1)[:, None]
    fx = np.clip(xi - x0, 0, 1)[None, :]
    b = block.astype(float)
    return ((1 - fy) * (1 - fx) * b[np.ix_(y0, x0)] + (1 - fy) * fx * b[np.ix_(y0, x1)]
            + fy * (1 - fx) * b[np.ix_(y1, x0)] + fy * fx * b[np.ix_(y1, x1)])


def _channel_response(block: np.ndarray, th: FeatureThresholds, factor: int):
    """One channel through the three gates.

    Returns (quality, direction, centroid) or None; the centroid is the
    bright-bin center of mass in original (non-supersampled) block pixels,
    giving the feature sub-block position accuracy.
    """
    v_min, v_max = float(block.min()), float(block.max())
    v_diff = v_max - v_min
    if v_diff < th.t_con:
        return None
    counts, edges = np.histogram(block, bins=th.n_bins, range=(v_min, v_max))
    top2 = np.argsort(counts, kind="stable")[-2:]
    centers = 0.5 * (edges[:-1] + edges[1:])
    lo_bin, hi_bin = sorted(top2, key=lambda b: centers[b])
    b_diff = centers[hi_bin] - centers[lo_bin]
    if b_diff < th.t_hist:
        return None
    lo_edge, hi_edge = edges[hi_bin], edges[hi_bin + 1]
    mask = (block >= lo_edge) & (block <= hi_edge if hi_bin == th.n_bins - 1 else block < hi_edge)
    ys, xs = np.nonzero(mask)
    if len(xs) < 2:
        return None
    com = ((ys.mean() + 0.5) / factor - 0.5, (xs.mean() + 0.5) / factor - 0.5)
    xs = xs - xs.mean()
    ys = ys - ys.mean()
    r_max, a_max = 0.0, 0.0
    for a in DIRECTIONS:
        rad = math.radians(a)
        c, s = math.cos(rad), math.sin(rad)
        xr = c * xs - s * ys
        yr = s * xs + c * ys
        var_y = float(np.var(yr))
        var_x = float(np.var(xr))
        ratio = var_x / var_y if var_y > 1e-12 else (math.inf if var_x > 1e-12 else 0.0)
        if ratio > r_max:
            r_max, a_max = ratio, a
    if r_max < th.t_dir:
        return None
    return float(b_diff), float(a_max), com


def detect_lane_features(img: TopViewImage,
                         thresholds: FeatureThresholds | None = None,
                         ego: EgoState | None = None) -> list[LaneFeature]:
    th = thresholds or FeatureThresholds()
    ego = ego or img.anchor
    sat = img.hsv[..., 1]
    val = img.hsv[..., 2]
    rows, cols = sat.shape
    nbr, nbc = rows // BLOCK, cols // BLOCK
    # cheap vectorized contrast pre-gate over both channels
    sat_b = sat[:nbr * BLOCK, :nbc * BLOCK].reshape(nbr, BLOCK, nbc, BLOCK)
    val_b = val[:nbr * BLOCK, :nbc * BLOCK].reshape(nbr, BLOCK, nbc, BLOCK)
    contrast = np.maximum(
        sat_b.max(axis=(1, 3)).astype(int) - sat_b.min(axis=(1, 3)).astype(int),
        val_b.max(axis=(1, 3)).astype(int) - val_b.min(axis=(1, 3)).astype(int),
    )
    candidates = np.argwhere(contrast >= th.t_con)
    features: list[LaneFeature] = []
    for br, bc in candidates:
        r0, c0 = br * BLOCK, bc * BLOCK
        valid = img.valid[r0:r0 + BLOCK, c0:c0 + BLOCK]
        if not valid.all():
            continue
        q_white = q_yellow = 0.0
        a_white = a_yellow = 0.0
        com_white = com_yellow = None
        for channel, is_lightness in ((sat, False), (val, True)):
            block = _supersample(channel[r0:r0 + BLOCK, c0:c0 + BLOCK], th.supersample)
            resp = _channel_response(block, th, th.supersample)
            if resp is None:
                continue
            if is_lightness:
                q_white, a_white, com_white = resp
            else:
                q_yellow, a_yellow, com_yellow = resp
        q = max(q_white, q_yellow)
        if q <= 0.0:
            continue
        color, a = "undecided", (a_white if q_white >= q_yellow else a_yellow)
        com = com_white if q_white >= q_yellow else com_yellow
        if q_white > th.t_col and q_white > q_yellow:
            color, a, com = "white", a_white, com_white
        elif q_yellow > th.t_col and q_yellow > q_white:
            color, a, com = "yellow", a_yellow, com_yellow
        center_r = r0 + com[0]
        center_c = c0 + com[1]
        fwd, lat = TopViewImage.pixel_to_car(center_r, center_c)
        world = ego_to_world((float(fwd), float(lat)), ego)
        features.append(LaneFeature(
            block=(int(br), int(bc)), quality=q, direction=a, color=color,
            position_car=(float(fwd), float(lat)),
            position_world=(float(world[0]), float(world[1])),
        ))
    return features
