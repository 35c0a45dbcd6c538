import itertools

import numpy as np
import pytest
from scipy import ndimage

from drivesim.fusion import (
    SensorKind,
    SensorObject,
    TrackModel,
    connected_components,
    new_track,
    rasterize_objects,
    split_track,
)


def laser(points, oid=1, t=1.0):
    return SensorObject(SensorKind.LASERFront, oid, np.asarray(points, dtype=float),
                        (0.0, 0.0), t)


def test_single_connected_contour_stays_one_track():
    track = new_track(1, TrackModel.FourD, [[0, 0], [1, 0], [2, 0]], 0.0, 0.0, t=0.0)
    objs = [laser([[0, 0], [1, 0], [2, 0]])]
    out = split_track(track, objs)
    assert len(out) == 1
    assert out[0].id == 1


def test_no_recent_objects_no_split():
    track = new_track(1, TrackModel.FourD, [[0, 0], [50, 0]], 0.0, 0.0, t=0.0)
    assert split_track(track, []) == [track]


def test_two_clusters_five_meters_apart_split():
    track = new_track(1, TrackModel.FourD,
                      [[0, 0], [1, 0], [6, 0], [7, 0]], 0.0, 0.0, t=0.0)
    objs = [laser([[0, 0], [1, 0]], oid=1), laser([[6, 0], [7, 0]], oid=2)]
    out = split_track(track, objs, cell=0.25)
    assert len(out) == 2
    sizes = sorted(len(t.points) for t in out)
    assert sizes == [2, 2]
    # partition: no point duplicated or lost
    all_pts = np.vstack([t.points for t in out])
    assert len(all_pts) == 4
    orig = {tuple(p) for p in track.points}
    assert {tuple(p) for p in all_pts} == orig
    # the larger/first component keeps the original id, the other gets a new one
    ids = sorted(t.id for t in out)
    assert 1 in ids and len(set(ids)) == 2


def test_person_drops_off_car_scenario():
    """A car polyline plus a diverging person point splits once the gap
    exceeds one raster cell."""
    cell = 0.25
    car_pts = [[0, 0], [2, 0], [4, 0]]
    track = new_track(7, TrackModel.FourD, car_pts + [[4.1, 0.5]], 0.0, 0.0, t=0.0)
    counter = itertools.count(100)
    for gap in [0.1, 0.2, 0.3, 0.6, 1.0, 2.0]:
        person = [4.0 + gap, 0.5 + gap]
        objs = [laser(car_pts, oid=1), laser([person], oid=2)]
        track_now = track.copy()
        track_now.points = np.vstack([np.asarray(car_pts, dtype=float), [person]])
        track_now.point_update_t = np.zeros(4)
        track_now.point_update_count = np.ones(4, dtype=np.int64)
        out = split_track(track_now, objs, cell=cell, id_alloc=lambda: next(counter))
        gap_cells = gap / cell
        if gap_cells > 2.0:  # more than one empty cell between clusters
            assert len(out) == 2, gap
        if len(out) == 2:
            assert sorted(len(t.points) for t in out) == [1, 3]


def test_connected_components_against_scipy_oracle():
    rng = np.random.default_rng(6)
    agree = 0
    for _ in range(200):
        n_clusters = int(rng.integers(1, 5))
        objs = []
        for c in range(n_clusters):
            center = rng.uniform(-20, 20, size=2)
            pts = center + rng.uniform(-0.8, 0.8, size=(int(rng.integers(2, 5)), 2))
            objs.append(laser(pts, oid=c))
        cells = rasterize_objects(objs, cell=0.25)
        comps = connected_components(cells)
        # scipy oracle on a dense raster
        idx = np.array(sorted(cells))
        mins = idx.min(axis=0)
        grid = np.zeros(idx.max(axis=0) - mins + 1, dtype=int)
        grid[idx[:, 0] - mins[0], idx[:, 1] - mins[1]] = 1
        _, n_scipy = ndimage.label(grid, structure=np.ones((3, 3)))
        if len(comps) == n_scipy:
            agree += 1
    assert agree == 200


def test_split_partition_property_random():
    rng = np.random.default_rng(12)
    counter = itertools.count(1000)
    for _ in range(50):
        k = int(rng.integers(2, 4))
        centers = rng.uniform(-30, 30, size=(k, 2))
        objs = []
        pts = []
        for c, center in enumerate(centers):
            cluster = center + rng.uniform(-0.5, 0.5, size=(3, 2))
            objs.append(laser(cluster, oid=c))
            pts.extend(cluster.tolist())
        track = new_track(1, TrackModel.FourD, pts, 0.0, 0.0, t=0.0)
        out = split_track(track, objs, id_alloc=lambda: next(counter))
        merged = np.vstack([t.points for t in out])
        assert len(merged) == len(track.points)
        assert {tuple(p) for p in merged} == {tuple(p) for p in track.points}
        assert len({t.id for t in out}) == len(out)
