"""Rolling drivability grid with toroidal sub-grid addressing.

The live window follows the vehicle at sub-grid granularity: world cell
(i, j) is stored at ``(i mod extent, j mod extent)``, and whenever the
window advances across a sub-grid border the sub-grids entering at the
new horizon are cleared for reuse.  One writer mutates the grid; region
snapshots are plain copies and safe to ship across threads.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .masses import (
    GradientMassConfig,
    MassSet,
    VACUOUS,
    combine_mass_arrays,
    gradient_mass_arrays,
)

_SOBEL_FULL_SCALE = 4.0  # kernel response to a clean one-cell height step


@dataclass(frozen=True)
class GridCell:
    height: float
    gradient: float
    masses: MassSet
    measured: bool
    last_update: float


@dataclass(frozen=True)
class Region:
    """Axis-aligned region in world cell indices, [i0, i0+ni) x [j0, j0+nj)."""

    i0: int
    j0: int
    ni: int
    nj: int


class RollingGrid:
    def __init__(self, cell_size: float = 0.25, extent: int = 400, sub: int = 16,
                 max_height_step: float = 0.5):
        if extent % sub != 0:
            raise ValueError("extent must be divisible by sub-grid size")
        self.cell_size = float(cell_size)
        self.extent = int(extent)
        self.sub = int(sub)
        self.nb = self.extent // self.sub
        self.max_height_step = float(max_height_step)
        shape = (self.extent, self.extent)
        self.height = np.zeros(shape)
        self.gradient = np.zeros(shape)
        self.m_d = np.zeros(shape)
        self.m_u = np.zeros(shape)
        self.m_n = np.ones(shape)
        self.measured = np.zeros(shape, dtype=bool)
        self.last_update = np.zeros(shape)
        # world block coordinate currently held by each sub-grid slot
        self._block_i = np.zeros((self.nb, self.nb), dtype=np.int64)
        self._block_j = np.zeros((self.nb, self.nb), dtype=np.int64)
        self._origin_block = (0, 0)
        self._origin_cell = (0, 0)
        self._init_blocks()

    # ---------------------------------------------------------------- layout

    def _init_blocks(self) -> None:
        bi0, bj0 = self._window_block_origin()
        for s in range(self.nb):
            wb = bi0 + ((s - bi0) % self.nb)
            self._block_i[s, :] = wb
        for s in range(self.nb):
            wb = bj0 + ((s - bj0) % self.nb)
            self._block_j[:, s] = wb

    def _window_block_origin(self) -> tuple[int, int]:
        obi, obj = self._origin_block
        return (obi - self.nb // 2, obj - self.nb // 2)

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self.cell_size), math.floor(y / self.cell_size))

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return ((i + 0.5) * self.cell_size, (j + 0.5) * self.cell_size)

    def live_region(self) -> Region:
        bi0, bj0 = self._window_block_origin()
        return Region(bi0 * self.sub, bj0 * self.sub, self.extent, self.extent)

    def is_live(self, i: int, j: int) -> bool:
        r = self.live_region()
        return r.i0 <= i < r.i0 + r.ni and r.j0 <= j < r.j0 + r.nj

    def cell_count(self) -> int:
        return self.extent * self.extent

    # ------------------------------------------------------------- relocation

    def relocate_origin(self, position) -> None:
        """Move the virtual origin; clear only sub-grids entering the window."""
        x, y = float(position[0]), float(position[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError("non-finite position")
        ci, cj = self.world_to_cell(x, y)
        self._origin_cell = (ci, cj)
        self._origin_block = (ci // self.sub, cj // self.sub)
        bi0, bj0 = self._window_block_origin()
        for si in range(self.nb):
            want_i = bi0 + ((si - bi0) % self.nb)
            for sj in range(self.nb):
                want_j = bj0 + ((sj - bj0) % self.nb)
                if self._block_i[si, sj] != want_i or self._block_j[si, sj] != want_j:
                    self._clear_block(si, sj)
                    self._block_i[si, sj] = want_i
                    self._block_j[si, sj] = want_j

    def _clear_block(self, si: int, sj: int) -> None:
        s = self.sub
        sl = (slice(si * s, (si + 1) * s), slice(sj * s, (sj + 1) * s))
        self.height[sl] = 0.0
        self.gradient[sl] = 0.0
        self.m_d[sl] = 0.0
        self.m_u[sl] = 0.0
        self.m_n[sl] = 1.0
        self.measured[sl] = False
        self.last_update[sl] = 0.0

    # ------------------------------------------------------------- accessors

    def _storage_index(self, i: int, j: int) -> tuple[int, int]:
        return (i % self.extent, j % self.extent)

    def cell(self, i: int, j: int) -> GridCell:
        if not self.is_live(i, j):
            raise IndexError(f"cell ({i}, {j}) outside live window")
        si, sj = self._storage_index(i, j)
        return GridCell(
            height=float(self.height[si, sj]),
            gradient=float(self.gradient[si, sj]),
            masses=MassSet(float(self.m_d[si, sj]), float(self.m_u[si, sj]),
                           float(self.m_n[si, sj])),
            measured=bool(self.measured[si, sj]),
            last_update=float(self.last_update[si, sj]),
        )

    def cell_masses_at(self, x: float, y: float) -> MassSet:
        i, j = self.world_to_cell(x, y)
        if not self.is_live(i, j):
            return VACUOUS
        si, sj = self._storage_index(i, j)
        return MassSet(float(self.m_d[si, sj]), float(self.m_u[si, sj]),
                       float(self.m_n[si, sj]))

    def masses_at_points(self, points: np.ndarray):
        """Vectorized mass lookup for (n, 2) world points.

        Points outside the live window read as vacuous.  Returns (d, u, n).
        """
        pts = np.asarray(points, dtype=float)
        i = np.floor(pts[:, 0] / self.cell_size).astype(np.int64)
        j = np.floor(pts[:, 1] / self.cell_size).astype(np.int64)
        r = self.live_region()
        live = ((i >= r.i0) & (i < r.i0 + r.ni) & (j >= r.j0) & (j < r.j0 + r.nj))
        si = i % self.extent
        sj = j % self.extent
        d = np.where(live, self.m_d[si, sj], 0.0)
        u = np.where(live, self.m_u[si, sj], 0.0)
        n = np.where(live, self.m_n[si, sj], 1.0)
        return d, u, n

    def _region_index(self, region: Region):
        r = self.live_region()
        if not (r.i0 <= region.i0 and region.i0 + region.ni <= r.i0 + r.ni
                and r.j0 <= region.j0 and region.j0 + region.nj <= r.j0 + r.nj):
            raise IndexError("region outside live window")
        ix = np.arange(region.i0, region.i0 + region.ni) % self.extent
        jx = np.arange(region.j0, region.j0 + region.nj) % self.extent
        return np.ix_(ix, jx)

    def region_view(self, region: Region) -> dict[str, np.ndarray]:
        """Copy of a region's per-cell fields, indexed [i - i0, j - j0]."""
        idx = self._region_index(region)
        return {
            "height": self.height[idx].copy(),
            "gradient": self.gradient[idx].copy(),
            "m_d": self.m_d[idx].copy(),
            "m_u": self.m_u[idx].copy(),
            "m_n": self.m_n[idx].copy(),
            "measured": self.measured[idx].copy(),
            "last_update": self.last_update[idx].copy(),
        }

    # ------------------------------------------------------------ ray updates

    def ray_update(self, sensor_origin, target, t: float) -> None:
        self.ray_update_batch(np.asarray([sensor_origin], dtype=float),
                              np.asarray([target], dtype=float), t)

    def ray_update_batch(self, origins: np.ndarray, targets: np.ndarray, t: float) -> None:
        """Trace sensor rays (3D start/end points) into the grid."""
        origins = np.asarray(origins, dtype=float)
        targets = np.asarray(targets, dtype=float)
        if origins.size == 0:
            return
        i0 = np.floor(origins[:, 0] / self.cell_size).astype(np.int64)
        j0 = np.floor(origins[:, 1] / self.cell_size).astype(np.int64)
        i1 = np.floor(targets[:, 0] / self.cell_size).astype(np.int64)
        j1 = np.floor(targets[:, 1] / self.cell_size).astype(np.int64)
        r = self.live_region()
        ok = ((i0 >= r.i0) & (i0 < r.i0 + r.ni) & (j0 >= r.j0) & (j0 < r.j0 + r.nj)
              & (i1 >= r.i0) & (i1 < r.i0 + r.ni) & (j1 >= r.j0) & (j1 < r.j0 + r.nj))
        if not ok.all():
            raise ValueError("ray endpoints outside live window; relocate first")
        _kernels.trace_rays(self.height, self.measured, self.last_update,
                            self.extent, i0, j0, i1, j1,
                            origins[:, 2].astype(float), targets[:, 2].astype(float),
                            float(t))

    # -------------------------------------------------------------- gradients

    def recompute_gradients(self, region: Region | None = None) -> None:
        """Sobel over the region's height raster, |Gx|+|Gy| normalized to [0, 1].

        Unmeasured cells borrow the nearest measured height for the
        convolution but keep gradient 0 themselves when nothing is measured.
        """
        region = region or self.live_region()
        idx = self._region_index(region)
        heights = self.height[idx]
        known = self.measured[idx]
        if not known.any():
            self.gradient[idx] = 0.0
            return
        filled = _kernels.nearest_fill(heights, known)
        padded = np.pad(filled, 1, mode="edge")
        gx = (padded[2:, :-2] + 2 * padded[2:, 1:-1] + padded[2:, 2:]
              - padded[:-2, :-2] - 2 * padded[:-2, 1:-1] - padded[:-2, 2:])
        gy = (padded[:-2, 2:] + 2 * padded[1:-1, 2:] + padded[2:, 2:]
              - padded[:-2, :-2] - 2 * padded[1:-1, :-2] - padded[2:, :-2])
        g = (np.abs(gx) + np.abs(gy)) / (_SOBEL_FULL_SCALE * self.max_height_step)
        self.gradient[idx] = np.clip(g, 0.0, 1.0)

    # ----------------------------------------------------------------- fusion

    def fuse_measurement(self, cells_i: np.ndarray, cells_j: np.ndarray,
                         d: np.ndarray, u: np.ndarray, n: np.ndarray) -> None:
        """Dempster-combine measurement masses into the addressed cells."""
        si = np.asarray(cells_i, dtype=np.int64) % self.extent
        sj = np.asarray(cells_j, dtype=np.int64) % self.extent
        dc, uc, nc = self.m_d[si, sj], self.m_u[si, sj], self.m_n[si, sj]
        nd, nu, nn, _conflict = combine_mass_arrays(dc, uc, nc, d, u, n)
        self.m_d[si, sj] = nd
        self.m_u[si, sj] = nu
        self.m_n[si, sj] = nn

    def fuse_gradient_region(self, cfg: GradientMassConfig,
                             region: Region | None = None) -> None:
        """Map the region's gradients to masses and fuse them in (measured cells only)."""
        region = region or self.live_region()
        idx = self._region_index(region)
        meas = self.measured[idx]
        d, u, n = gradient_mass_arrays(self.gradient[idx], cfg)
        dc, uc, nc = self.m_d[idx], self.m_u[idx], self.m_n[idx]
        nd, nu, nn, _ = combine_mass_arrays(dc, uc, nc, d, u, n)
        self.m_d[idx] = np.where(meas, nd, dc)
        self.m_u[idx] = np.where(meas, nu, uc)
        self.m_n[idx] = np.where(meas, nn, nc)

    # ---------------------------------------------------------------- exports

    def export_drivability(self, region: Region | None = None) -> bytes:
        """Binary P6 pixmap: green drivable, red undrivable, blue unknown.

        One pixel per cell; row 0 is the maximum-y row.
        """
        region = region or self.live_region()
        idx = self._region_index(region)
        d, u, n = self.m_d[idx], self.m_u[idx], self.m_n[idx]
        img = np.zeros((region.nj, region.ni, 3), dtype=np.uint8)
        # transpose to image layout: rows over y (descending), cols over x
        dT, uT, nT = d.T[::-1], u.T[::-1], n.T[::-1]
        drivable = (dT > uT) & (dT > nT)
        undrivable = (uT > dT) & (uT > nT)
        img[..., 2] = 255
        img[drivable] = (0, 255, 0)
        img[undrivable] = (255, 0, 0)
        header = f"P6\n{region.ni} {region.nj}\n255\n".encode()
        return header + img.tobytes()

    def snapshot(self, region: Region | None = None) -> bytes:
        """Binary region snapshot.

        Header: magic ``DGRD``, u16 version, f32 cell size, u32 extent,
        f64 world x/y of the region's min corner, u32 ni, u32 nj.
        Records follow row-major with rows over y descending (matching the
        pixmap export), each ``<fffffB``: height, gradient, m(D), m(U),
        m(N), flags (bit0 measured).
        """
        region = region or self.live_region()
        idx = self._region_index(region)
        head = struct.pack("<4sHfIddII", b"DGRD", 1, self.cell_size, self.extent,
                           region.i0 * self.cell_size, region.j0 * self.cell_size,
                           region.ni, region.nj)
        h = self.height[idx].T[::-1].astype("<f4")
        g = self.gradient[idx].T[::-1].astype("<f4")
        d = self.m_d[idx].T[::-1].astype("<f4")
        u = self.m_u[idx].T[::-1].astype("<f4")
        n = self.m_n[idx].T[::-1].astype("<f4")
        flags = self.measured[idx].T[::-1].astype("<u1")
        rec = np.empty(h.shape + (21,), dtype=np.uint8)
        rec[..., 0:4] = h[..., None].view(np.uint8).reshape(h.shape + (4,))
        rec[..., 4:8] = g[..., None].view(np.uint8).reshape(g.shape + (4,))
        rec[..., 8:12] = d[..., None].view(np.uint8).reshape(d.shape + (4,))
        rec[..., 12:16] = u[..., None].view(np.uint8).reshape(u.shape + (4,))
        rec[..., 16:20] = n[..., None].view(np.uint8).reshape(n.shape + (4,))
        rec[..., 20] = flags
        return head + rec.tobytes()


class HeightFilter:
    """Exponential smoothing of the vehicle height with an outlier gate."""

    def __init__(self, alpha: float = 0.2, outlier_gate: float = 0.5,
                 reseed_after: int = 10):
        self.alpha = alpha
        self.outlier_gate = outlier_gate
        self.reseed_after = reseed_after
        self._estimate: float | None = None
        self._rejects = 0

    @property
    def estimate(self) -> float:
        return 0.0 if self._estimate is None else self._estimate

    def update(self, z: float) -> float:
        if self._estimate is None:
            self._estimate = float(z)
            return self._estimate
        if abs(z - self._estimate) > self.outlier_gate:
            self._rejects += 1
            if self._rejects >= self.reseed_after:
                self._estimate = float(z)
                self._rejects = 0
            return self._estimate
        self._rejects = 0
        self._estimate += self.alpha * (z - self._estimate)
        return self._estimate
