"""Track splitting via connected components on a rasterized neighborhood.

A stale association can fuse independent real-world objects into one
polyline track (a person stepping out of a car).  The raster graph around
the track starts black; the polylines of the recently associated sensor
objects are drawn white; each connected white component then seeds its
own track, and the input track's contour points are partitioned among the
components.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Callable, Sequence

import numpy as np

from .objects import SensorObject, Track


def _draw_segment(cells: set[tuple[int, int]], i0: int, j0: int, i1: int, j1: int) -> None:
    dx, dy = abs(i1 - i0), -abs(j1 - j0)
    sx = 1 if i0 < i1 else -1
    sy = 1 if j0 < j1 else -1
    err = dx + dy
    while True:
        cells.add((i0, j0))
        if i0 == i1 and j0 == j1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            i0 += sx
        if e2 <= dx:
            err += dx
            j0 += sy


def rasterize_objects(objects: Sequence[SensorObject], cell: float) -> set[tuple[int, int]]:
    """Cells covered by the objects' contour polylines (white nodes)."""
    cells: set[tuple[int, int]] = set()
    for obj in objects:
        pts = obj.points
        idx = [(math.floor(x / cell), math.floor(y / cell)) for x, y in pts]
        if len(idx) == 1:
            cells.add(idx[0])
        for (i0, j0), (i1, j1) in zip(idx[:-1], idx[1:]):
            _draw_segment(cells, i0, j0, i1, j1)
    return cells


def connected_components(cells: set[tuple[int, int]]) -> list[set[tuple[int, int]]]:
    """8-connected components of the white cell set (BFS)."""
    remaining = set(cells)
    components = []
    while remaining:
        seed = min(remaining)  # deterministic order
        comp = {seed}
        remaining.discard(seed)
        queue = deque([seed])
        while queue:
            ci, cj = queue.popleft()
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    nb = (ci + di, cj + dj)
                    if nb in remaining:
                        remaining.discard(nb)
                        comp.add(nb)
                        queue.append(nb)
        components.append(comp)
    return components


def split_track(track: Track, recent_objects: Sequence[SensorObject],
                cell: float = 0.25, margin: float = 1.0,
                id_alloc: Callable[[], int] | None = None) -> list[Track]:
    """Split a track whose recent sensor evidence forms independent sets.

    Returns the input unchanged when there is no evidence or only one
    connected component.  Contour points are partitioned by component
    membership (nearest component for points off the polylines); the
    component holding the most points keeps the original id.
    """
    if not recent_objects:
        return [track]
    white = rasterize_objects(recent_objects, cell)
    if not white:
        return [track]
    components = connected_components(white)
    if len(components) <= 1:
        return [track]

    comp_arrays = [np.asarray(sorted(comp), dtype=float) for comp in components]
    assign = np.empty(len(track.points), dtype=int)
    for pi, (x, y) in enumerate(track.points):
        ci, cj = math.floor(x / cell), math.floor(y / cell)
        best, best_d = 0, math.inf
        for ci_idx, comp in enumerate(components):
            if (ci, cj) in comp:
                best, best_d = ci_idx, 0.0
                break
            arr = comp_arrays[ci_idx]
            d = np.hypot(arr[:, 0] - ci, arr[:, 1] - cj).min()
            if d < best_d:
                best, best_d = ci_idx, d
        assign[pi] = best

    counts = np.bincount(assign, minlength=len(components))
    keeper = int(np.argmax(counts))
    id_alloc = id_alloc or iter(range(10 ** 9, 2 * 10 ** 9)).__next__
    out: list[Track] = []
    for ci_idx in range(len(components)):
        mask = assign == ci_idx
        if not mask.any():
            continue
        t = track.copy()
        t.points = track.points[mask]
        t.point_update_t = track.point_update_t[mask]
        t.point_update_count = track.point_update_count[mask]
        if ci_idx != keeper:
            t.id = id_alloc()
        out.append(t)
    return out if len(out) > 1 else [track]
