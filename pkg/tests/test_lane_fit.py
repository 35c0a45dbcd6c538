import math

import numpy as np
import pytest

from drivesim.geometry import EgoState, Pose2
from drivesim.vision import LaneFeature, LaneFitConfig, LaneModel, LaneSegment, fit_lane_model


def feature_at(x, y, color="white", q=60.0, weight=1.0):
    return LaneFeature(block=(0, 0), quality=q, direction=0.0, color=color,
                       position_car=(x, y), position_world=(x, y), weight=weight)


def straight_lane_features(width=4.0, length=30.0, step=0.5, colors=("white", "white")):
    feats = []
    for x in np.arange(0.0, length + 1e-9, step):
        feats.append(feature_at(x, width / 2, colors[0]))
        feats.append(feature_at(x, -width / 2, colors[1]))
    return feats


def test_straight_lane_recovered():
    feats = straight_lane_features()
    model = fit_lane_model(feats, None, EgoState(0, 0, 0))
    assert model.valid
    assert len(model.segments) >= 5
    for seg in model.segments:
        assert abs(seg.d) <= 0.01
        assert seg.width == pytest.approx(4.0, abs=0.05)
        assert seg.marks_left and seg.marks_right
        assert seg.color_left == "white" and seg.color_right == "white"
        assert not seg.adjacent_left and not seg.adjacent_right


def test_empty_features_invalid_model():
    model = fit_lane_model([], None, EgoState(3, 4, 0.5))
    assert not model.valid
    assert model.segments == []
    assert model.anchor.x == 3


def test_arc_heading_changes_match_geometry():
    R = 30.0
    width = 4.0
    feats = []
    # left-curving arc: center at (0, R), ego tangent at origin
    for s_arc in np.arange(0.0, 32.0, 0.4):
        phi = s_arc / R
        cx, cy = math.sin(phi) * R, R - math.cos(phi) * R
        nx, ny = -math.sin(phi), math.cos(phi)   # inward normal, toward (0, R)
        feats.append(feature_at(cx + nx * width / 2, cy + ny * width / 2))
        feats.append(feature_at(cx - nx * width / 2, cy - ny * width / 2))
    model = fit_lane_model(feats, None, EgoState(0, 0, 0))
    assert model.valid and len(model.segments) >= 4
    expected = 5.0 / R
    # chord-to-chord turns (the anchor-to-first-chord angle is half a turn)
    for seg in model.segments[1:]:
        assert seg.d == pytest.approx(expected, rel=0.10)
    assert model.segments[0].d == pytest.approx(expected / 2, rel=0.25)
    for seg in model.segments:
        assert seg.width == pytest.approx(width, abs=0.3)


def test_adjacent_lane_detected():
    feats = straight_lane_features()
    # markings of an adjacent left lane (outer left line at +1.5 w)
    for x in np.arange(0.0, 30.0, 0.5):
        feats.append(feature_at(x, 6.0, "yellow"))
    model = fit_lane_model(feats, None, EgoState(0, 0, 0))
    assert model.valid
    assert model.segments[0].adjacent_left
    assert not model.segments[0].adjacent_right


def test_pose_chain_reconstruction_identity():
    segs = [LaneSegment(length=5.0, width=4.0, d=0.05 * i, quality=1.0)
            for i in range(5)]
    model = LaneModel(anchor=Pose2(2.0, -1.0, 0.3), segments=segs, valid=True)
    poses = model.poses()
    # recompute independently
    heading = 0.3
    x, y = 2.0, -1.0
    assert poses[0] == Pose2(2.0, -1.0, 0.3)
    for i, seg in enumerate(segs):
        heading += seg.d
        x += 5.0 * math.cos(heading)
        y += 5.0 * math.sin(heading)
        assert abs(poses[i + 1].x - x) < 1e-9
        assert abs(poses[i + 1].y - y) < 1e-9
        assert abs(poses[i + 1].heading - heading) < 1e-9


def test_lane_model_json_record():
    model = fit_lane_model(straight_lane_features(), None, EgoState(0, 0, 0))
    import json

    rec = json.loads(model.to_json())
    assert rec["valid"] is True
    assert rec["c0"] == {"x": 0.0, "y": 0.0, "heading": 0.0}
    assert all({"l", "w", "d", "flags", "colors", "quality"} <= set(s) for s in rec["segments"])


def test_prev_model_guides_roi_when_features_vanish():
    feats = straight_lane_features()
    model1 = fit_lane_model(feats, None, EgoState(0, 0, 0))
    assert model1.valid
    model2 = fit_lane_model([], model1, EgoState(0, 0, 0))
    assert not model2.valid  # caller keeps model1 as guess
