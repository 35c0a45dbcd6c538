"""Two-stage data association between tracks and sensor objects.

Stage one is a cheap justification weight (minimum point distance plus
velocity mismatch); stage two assigns measured contour points to tracked
contour points with a greedy global-minimum extraction over the pairwise
distance matrix.
"""

from __future__ import annotations

import math

import numpy as np

from .objects import SensorObject, Track


def association_weight(track: Track, meas: SensorObject,
                       a: float = 1.0, b: float = 0.5) -> float:
    """Scalar association weight: a * min point distance + b * velocity gap."""
    d = pairwise_distances(track.points, meas.points).min()
    tv = track.velocity
    dv = math.hypot(tv[0] - meas.velocity[0], tv[1] - meas.velocity[1])
    return a * d + b * dv


def pairwise_distances(track_points: np.ndarray, meas_points: np.ndarray) -> np.ndarray:
    tp = np.atleast_2d(np.asarray(track_points, dtype=float))
    mp = np.atleast_2d(np.asarray(meas_points, dtype=float))
    diff = tp[:, None, :] - mp[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def match_contours(track_points: np.ndarray, meas_points: np.ndarray) -> list[tuple[int, int]]:
    """Assign measured points to tracked points (pairs of indices (k, l)).

    Greedy global-minimum extraction: repeatedly take the smallest
    remaining matrix entry whose row and column are both unused.  Once one
    side is exhausted, leftover measured points fall back to their nearest
    tracked point, so every measured point ends up assigned.
    """
    tp = np.atleast_2d(np.asarray(track_points, dtype=float))
    mp = np.atleast_2d(np.asarray(meas_points, dtype=float))
    if tp.size == 0 or mp.size == 0:
        return []
    omega = pairwise_distances(tp, mp)
    n, m = omega.shape
    order = np.argsort(omega, axis=None, kind="stable")
    used_rows = np.zeros(n, dtype=bool)
    used_cols = np.zeros(m, dtype=bool)
    pairs: list[tuple[int, int]] = []
    for flat in order:
        k, l = divmod(int(flat), m)
        if used_rows[k] or used_cols[l]:
            continue
        pairs.append((k, l))
        used_rows[k] = True
        used_cols[l] = True
        if used_rows.all() or used_cols.all():
            break
    for l in range(m):
        if not used_cols[l]:
            pairs.append((int(np.argmin(omega[:, l])), l))
    pairs.sort(key=lambda kl: kl[1])
    return pairs


def assignment_cost(track_points, meas_points, pairs) -> float:
    omega = pairwise_distances(track_points, meas_points)
    return float(sum(omega[k, l] for k, l in pairs))
