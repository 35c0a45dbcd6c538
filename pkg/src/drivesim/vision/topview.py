"""Multi-camera inverse-perspective fusion into one HSV top view.

The top view covers 30 m ahead of the vehicle and 12 m to either side at
35 pixels per meter (840 x 1050 region of interest).  Overlapping camera
projections are resolved with the fixed precedence tele > middle > left
> right; pixels outside every frustum are marked invalid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import EgoState
from .image_io import rgb_to_hsv

TOPVIEW_SCALE = 35           # pixels per meter
TOPVIEW_AHEAD = 30.0         # meters in front of the rear-axle origin
TOPVIEW_LATERAL = 12.0       # meters to each side
TOPVIEW_SHAPE = (int(TOPVIEW_AHEAD * TOPVIEW_SCALE),
                 int(2 * TOPVIEW_LATERAL * TOPVIEW_SCALE))  # (1050, 840)

CAMERA_PRECEDENCE = ("tele", "middle", "left", "right")


def _rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus mounting pose in the vehicle frame.

    Vehicle frame: x forward, y left, z up.  With zero mount angles the
    optical axis points along +x; positive pitch tilts the camera down.
    Angles are radians, positions meters.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int = 640
    height: int = 480
    x: float = 0.0
    y: float = 0.0
    z: float = 1.2
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "CameraModel":
        values: dict[str, float] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"camera model line {lineno}: expected key=value")
            key, val = (part.strip() for part in line.split("=", 1))
            try:
                values[key] = float(val)
            except ValueError:
                raise ValueError(f"camera model line {lineno}: bad number {val!r}") from None
        required = {"fx", "fy", "cx", "cy"}
        missing = required - values.keys()
        if missing:
            raise ValueError(f"camera model missing keys: {sorted(missing)}")
        known = required | {"width", "height", "x", "y", "z", "yaw", "pitch", "roll"}
        unknown = values.keys() - known
        if unknown:
            raise ValueError(f"camera model unknown keys: {sorted(unknown)}")
        if "width" in values:
            values["width"] = int(values["width"])
        if "height" in values:
            values["height"] = int(values["height"])
        return cls(**values)

    def serialize(self) -> str:
        keys = ("fx", "fy", "cx", "cy", "width", "height",
                "x", "y", "z", "yaw", "pitch", "roll")
        return "".join(f"{k}={getattr(self, k)}\n" for k in keys)

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(forward, right, down) unit vectors in the vehicle frame."""
        R = _rot_z(self.yaw) @ _rot_y(self.pitch) @ _rot_x(self.roll)
        return R @ np.array([1.0, 0, 0]), R @ np.array([0, -1.0, 0]), R @ np.array([0, 0, -1.0])

    def project_points(self, pts_car: np.ndarray):
        """Project (n, 3) vehicle-frame points; returns (u, v, valid)."""
        f, r, d = self.axes()
        rel = np.asarray(pts_car, dtype=float) - np.array([self.x, self.y, self.z])
        zc = rel @ f
        xc = rel @ r
        yc = rel @ d
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * xc / zc + self.cx
            v = self.fy * yc / zc + self.cy
        valid = (zc > 0.1) & (u >= 0) & (u < self.width) & (v >= 0) & (v < self.height)
        return u, v, valid


@dataclass
class TopViewImage:
    hsv: np.ndarray                  # (1050, 840, 3) uint8
    valid: np.ndarray                # (1050, 840) bool
    anchor: EgoState = field(default_factory=lambda: EgoState(0, 0, 0))
    scale: int = TOPVIEW_SCALE

    def __post_init__(self) -> None:
        if self.hsv.shape[:2] != TOPVIEW_SHAPE:
            raise ValueError(f"top view must be {TOPVIEW_SHAPE}, got {self.hsv.shape[:2]}")

    @staticmethod
    def pixel_to_car(row, col):
        """Ground point (vehicle frame) under a top-view pixel center."""
        fwd = TOPVIEW_AHEAD - (np.asarray(row, dtype=float) + 0.5) / TOPVIEW_SCALE
        lat = TOPVIEW_LATERAL - (np.asarray(col, dtype=float) + 0.5) / TOPVIEW_SCALE
        return fwd, lat

    @staticmethod
    def car_to_pixel(fwd, lat):
        row = (TOPVIEW_AHEAD - np.asarray(fwd, dtype=float)) * TOPVIEW_SCALE - 0.5
        col = (TOPVIEW_LATERAL - np.asarray(lat, dtype=float)) * TOPVIEW_SCALE - 0.5
        return row, col


def build_topview(camera_images: dict[str, np.ndarray],
                  camera_models: dict[str, CameraModel],
                  ego: EgoState) -> TopViewImage:
    """Inverse-perspective lookup of each top-view pixel into the cameras."""
    rows, cols = TOPVIEW_SHAPE
    out = np.zeros((rows, cols, 3), dtype=np.uint8)
    filled = np.zeros((rows, cols), dtype=bool)
    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    fwd, lat = TopViewImage.pixel_to_car(rr, cc)
    pts_car = np.stack([fwd.ravel(), lat.ravel(), np.zeros(rows * cols)], axis=1)
    for name in CAMERA_PRECEDENCE:
        if name not in camera_images or name not in camera_models:
            continue
        hsv = rgb_to_hsv(camera_images[name])
        model = camera_models[name]
        u, v, valid = model.project_points(pts_car)
        take = valid & ~filled.ravel()
        if not take.any():
            continue
        ui = np.clip(u[take].astype(int), 0, model.width - 1)
        vi = np.clip(v[take].astype(int), 0, model.height - 1)
        flat = np.flatnonzero(take)
        out.reshape(-1, 3)[flat] = hsv[vi, ui]
        filled.ravel()[flat] = True
    return TopViewImage(hsv=out, valid=filled, anchor=ego)
