"""Numba kernels for the hot grid paths (batch ray updates, nearest fill)."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def trace_rays(height, measured, last_update, extent,
               i0s, j0s, i1s, j1s, z0s, z1s, t):
    """Bresenham-traverse each ray, applying the height update rules.

    Cells are addressed toroidally (world index mod extent).  Intermediate
    cells are lowered to the interpolated ray height when they exceed it;
    the endpoint cell stores the target height.  Every touched cell is
    marked measured with timestamp ``t``.
    """
    n_rays = i0s.shape[0]
    for r in range(n_rays):
        x0, y0 = i0s[r], j0s[r]
        x1, y1 = i1s[r], j1s[r]
        z0, z1 = z0s[r], z1s[r]
        dx = abs(x1 - x0)
        dy = -abs(y1 - y0)
        sx = 1 if x0 < x1 else -1
        sy = 1 if y0 < y1 else -1
        n = max(dx, -dy)
        err = dx + dy
        k = 0
        while True:
            si = x0 % extent
            sj = y0 % extent
            if x0 == x1 and y0 == y1:
                height[si, sj] = z1
                measured[si, sj] = True
                last_update[si, sj] = t
                break
            ray_h = z0 + (z1 - z0) * (k / n)
            if height[si, sj] > ray_h:
                height[si, sj] = ray_h
            measured[si, sj] = True
            last_update[si, sj] = t
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x0 += sx
            if e2 <= dx:
                err += dx
                y0 += sy
            k += 1


@njit(cache=True)
def nearest_fill(values, known):
    """Fill unknown cells with the value of the nearest known cell.

    Two-pass chamfer propagation; returns a filled copy.  Fully unknown
    input is returned as zeros.
    """
    ni, nj = values.shape
    big = 1e30
    dist = np.empty((ni, nj), dtype=np.float64)
    out = values.copy()
    for i in range(ni):
        for j in range(nj):
            dist[i, j] = 0.0 if known[i, j] else big
    # forward pass
    for i in range(ni):
        for j in range(nj):
            if dist[i, j] == 0.0:
                continue
            for di, dj, w in ((-1, 0, 1.0), (0, -1, 1.0), (-1, -1, 1.4142135623730951), (-1, 1, 1.4142135623730951)):
                pi, pj = i + di, j + dj
                if 0 <= pi < ni and 0 <= pj < nj and dist[pi, pj] + w < dist[i, j]:
                    dist[i, j] = dist[pi, pj] + w
                    out[i, j] = out[pi, pj]
    # backward pass
    for i in range(ni - 1, -1, -1):
        for j in range(nj - 1, -1, -1):
            if dist[i, j] == 0.0:
                continue
            for di, dj, w in ((1, 0, 1.0), (0, 1, 1.0), (1, 1, 1.4142135623730951), (1, -1, 1.4142135623730951)):
                pi, pj = i + di, j + dj
                if 0 <= pi < ni and 0 <= pj < nj and dist[pi, pj] + w < dist[i, j]:
                    dist[i, j] = dist[pi, pj] + w
                    out[i, j] = out[pi, pj]
    for i in range(ni):
        for j in range(nj):
            if dist[i, j] >= big:
                out[i, j] = 0.0
    return out
