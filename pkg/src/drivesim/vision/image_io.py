"""Portable pixmap I/O (binary P5/P6) and 8-bit color conversions."""

from __future__ import annotations

import numpy as np


def write_pixmap(image: np.ndarray) -> bytes:
    """Encode a (h, w) grayscale or (h, w, 3) RGB uint8 array."""
    img = np.asarray(image, dtype=np.uint8)
    if img.ndim == 2:
        header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n"
    elif img.ndim == 3 and img.shape[2] == 3:
        header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n"
    else:
        raise ValueError("expected (h, w) or (h, w, 3) uint8 image")
    return header.encode() + img.tobytes()


def read_pixmap(data: bytes) -> np.ndarray:
    """Decode a binary P5/P6 pixmap into a uint8 array."""
    if not data.startswith((b"P5", b"P6")):
        raise ValueError("not a binary P5/P6 pixmap")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    width, height, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError("only 8-bit pixmaps supported")
    channels = 3 if data.startswith(b"P6") else 1
    body = np.frombuffer(data, dtype=np.uint8, count=width * height * channels,
                         offset=pos)
    if channels == 3:
        return body.reshape(height, width, 3).copy()
    return body.reshape(height, width).copy()


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """8-bit HSV: H in [0, 179], S and V in [0, 255] (OpenCV-style ranges)."""
    img = np.asarray(rgb, dtype=np.float64)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    v = img.max(axis=-1)
    c = v - img.min(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(v > 0, 255.0 * c / v, 0.0)
        h = np.zeros_like(v)
        mask = c > 0
        rmax = mask & (v == r)
        gmax = mask & (v == g) & ~rmax
        bmax = mask & ~rmax & ~gmax
        h[rmax] = (60.0 * (g - b) / c)[rmax]
        h[gmax] = (120.0 + 60.0 * (b - r) / c)[gmax]
        h[bmax] = (240.0 + 60.0 * (r - g) / c)[bmax]
    h = np.where(h < 0, h + 360.0, h) / 2.0
    out = np.stack([h, s, v], axis=-1)
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def rgb_to_yuv(rgb: np.ndarray) -> np.ndarray:
    """BT.601 YUV with chrominance centered at 128, float64."""
    img = np.asarray(rgb, dtype=np.float64)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    u = 0.492 * (b - y) + 128.0
    v = 0.877 * (r - y) + 128.0
    return np.stack([y, u, v], axis=-1)
