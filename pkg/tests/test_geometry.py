import math

import numpy as np
import pytest

from drivesim.geometry import (
    EgoState,
    Polygon2,
    Pose2,
    ego_to_world,
    normalize_angle,
    point_in_polygon,
    points_in_polygon,
    polyline_point_distances,
    world_to_ego,
)

ACTIVATION_BOX = Polygon2(((0, 2), (10, 2), (10, -2), (0, -2)))


def test_ego_to_world_identity():
    ego = EgoState(0, 0, 0)
    assert ego_to_world((0, 0), ego) == (0.0, 0.0)


def test_ego_to_world_translation():
    ego = EgoState(10, 5, 0)
    assert ego_to_world((1, 0), ego) == pytest.approx((11.0, 5.0))


def test_ego_to_world_rotation():
    ego = EgoState(0, 0, math.pi / 2)
    assert ego_to_world((1, 0), ego) == pytest.approx((0.0, 1.0), abs=1e-12)


def test_world_to_ego_examples():
    assert world_to_ego((11, 5), EgoState(10, 5, 0)) == pytest.approx((1.0, 0.0))
    assert world_to_ego((0, 1), EgoState(0, 0, math.pi / 2)) == pytest.approx((1.0, 0.0), abs=1e-12)


def test_round_trip_random_poses():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        ego = EgoState(*rng.uniform(-100, 100, size=2), rng.uniform(-math.pi, math.pi))
        p = rng.uniform(-50, 50, size=2)
        q = world_to_ego(ego_to_world(p, ego), ego)
        assert abs(q[0] - p[0]) <= 1e-12 * max(1, abs(p[0]))
        assert abs(q[1] - p[1]) <= 1e-12 * max(1, abs(p[1]))


def test_round_trip_fixed_point():
    ego = EgoState(3.7, -2.2, 1.234)
    q = world_to_ego(ego_to_world((3, 4), ego), ego)
    assert q == pytest.approx((3.0, 4.0), abs=1e-12)


def test_heading_normalization_idempotent():
    for a in np.linspace(-10, 10, 101):
        once = normalize_angle(a)
        assert -math.pi < once <= math.pi
        assert normalize_angle(once) == once


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        EgoState(float("nan"), 0, 0)
    with pytest.raises(ValueError):
        ego_to_world((float("inf"), 0), EgoState(0, 0, 0))


def test_point_in_polygon_activation_box():
    assert point_in_polygon((5, 0), ACTIVATION_BOX)
    assert not point_in_polygon((11, 0), ACTIVATION_BOX)
    # boundary counts as inside
    assert point_in_polygon((0, 2), ACTIVATION_BOX)
    assert point_in_polygon((0, 0), ACTIVATION_BOX)
    assert point_in_polygon((10, 1), ACTIVATION_BOX)


def test_points_in_polygon_matches_scalar():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-3, 13, size=(500, 2))
    vec = points_in_polygon(pts, ACTIVATION_BOX)
    for p, v in zip(pts, vec):
        assert v == point_in_polygon(p, ACTIVATION_BOX)


def test_polygon_validation():
    with pytest.raises(ValueError):
        Polygon2(((0, 0), (1, 1)))
    with pytest.raises(ValueError):
        # bow-tie self-intersection
        Polygon2(((0, 0), (1, 1), (1, 0), (0, 1)))


def test_pose_heading_normalized():
    p = Pose2(0, 0, 3 * math.pi)
    assert p.heading == pytest.approx(math.pi)


def test_polyline_point_distances():
    line = np.array([[0.0, 0.0], [10.0, 0.0]])
    pts = np.array([[5.0, 3.0], [-2.0, 0.0], [12.0, 0.0]])
    d = polyline_point_distances(pts, line)
    assert d == pytest.approx([3.0, 2.0, 2.0])
    single = polyline_point_distances(pts, np.array([[0.0, 0.0]]))
    assert single == pytest.approx([math.hypot(5, 3), 2.0, 12.0])
