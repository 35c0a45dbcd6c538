from .area import (
    AreaConfig,
    DrivabilityFrame,
    PolygonAdvance,
    PreprocessConfig,
    advance_search_polygon,
    classify_area,
    preprocess_masks,
)
from .image_io import read_pixmap, rgb_to_hsv, rgb_to_yuv, write_pixmap
from .lane_features import BLOCK, FeatureThresholds, LaneFeature, detect_lane_features
from .lane_model import LaneFitConfig, LaneModel, LanePipeline, LaneSegment, fit_lane_model
from .topview import (
    CAMERA_PRECEDENCE,
    CameraModel,
    TOPVIEW_SCALE,
    TOPVIEW_SHAPE,
    TopViewImage,
    build_topview,
)

__all__ = [
    "AreaConfig", "BLOCK", "CAMERA_PRECEDENCE", "CameraModel",
    "DrivabilityFrame", "FeatureThresholds", "LaneFeature", "LaneFitConfig",
    "LaneModel", "LanePipeline", "LaneSegment", "PolygonAdvance",
    "PreprocessConfig", "TOPVIEW_SCALE", "TOPVIEW_SHAPE", "TopViewImage",
    "advance_search_polygon", "build_topview", "classify_area",
    "detect_lane_features", "fit_lane_model", "preprocess_masks",
    "read_pixmap", "rgb_to_hsv", "rgb_to_yuv", "write_pixmap",
]
