"""Dempster-Shafer drivability masses over the frame {drivable, undrivable}.

A mass set assigns belief to the three focal elements D (drivable),
U (undrivable) and N (the full frame, i.e. unknown).  The vacuous set
(0, 0, 1) is the identity of combination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIMPLEX_TOL = 1e-9

VACUOUS: "MassSet"


@dataclass(frozen=True)
class MassSet:
    d: float
    u: float
    n: float

    def __post_init__(self) -> None:
        for m in (self.d, self.u, self.n):
            if m < -SIMPLEX_TOL or m > 1.0 + SIMPLEX_TOL:
                raise ValueError(f"mass out of range: {self}")
        if abs(self.d + self.u + self.n - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"masses do not sum to 1: {self}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.d, self.u, self.n)

    def argmax(self) -> str:
        """Dominant hypothesis; ties resolve to unknown."""
        if self.d > self.u and self.d > self.n:
            return "drivable"
        if self.u > self.d and self.u > self.n:
            return "undrivable"
        return "unknown"


VACUOUS = MassSet(0.0, 0.0, 1.0)


def conflict(m_c: MassSet, m_m: MassSet) -> float:
    """Mass assigned to contradictory intersections (K of the combination)."""
    return m_c.d * m_m.u + m_c.u * m_m.d


def combine_masses(m_c: MassSet, m_m: MassSet) -> MassSet:
    """Dempster's rule of combination; total conflict resets to vacuous."""
    k = conflict(m_c, m_m)
    if k >= 1.0 - 1e-12:
        return VACUOUS
    norm = 1.0 / (1.0 - k)
    d = (m_c.d * m_m.d + m_c.d * m_m.n + m_c.n * m_m.d) * norm
    u = (m_c.u * m_m.u + m_c.u * m_m.n + m_c.n * m_m.u) * norm
    n = m_c.n * m_m.n * norm
    return MassSet(d, u, n)


def combine_mass_arrays(dc, uc, nc, dm, um, nm):
    """Vectorized Dempster combination over parallel numpy arrays.

    Total-conflict entries reset to the vacuous set.  Returns (d, u, n, conflict_mask).
    """
    dc, uc, nc = (np.asarray(a, dtype=float) for a in (dc, uc, nc))
    dm, um, nm = (np.asarray(a, dtype=float) for a in (dm, um, nm))
    k = dc * um + uc * dm
    total = k >= 1.0 - 1e-12
    norm = 1.0 / (1.0 - np.where(total, 0.0, k))
    d = (dc * dm + dc * nm + nc * dm) * norm
    u = (uc * um + uc * nm + nc * um) * norm
    n = (nc * nm) * norm
    d[total] = 0.0
    u[total] = 0.0
    n[total] = 1.0
    # guard against float drift over long fusion chains
    d = np.clip(d, 0.0, 1.0)
    u = np.clip(u, 0.0, 1.0)
    n = np.clip(n, 0.0, 1.0)
    s = d + u + n
    return d / s, u / s, n / s, total


def masses_from_monovision(p_d: float, d_max: float) -> MassSet:
    """Map a per-pixel drivability estimate in [0, 1] to a mass set.

    ``d_max`` caps the trust placed in the mono vision source.
    """
    if not 0.0 <= p_d <= 1.0:
        raise ValueError(f"p_d out of range: {p_d}")
    if not 0.0 <= d_max <= 1.0:
        raise ValueError(f"d_max out of range: {d_max}")
    d = d_max * p_d
    n = 1.0 - d_max
    u = 1.0 - d - n
    return MassSet(d, u, n)


@dataclass(frozen=True)
class GradientMassConfig:
    """Piecewise-linear mapping from height gradients to masses."""

    d_max: float = 0.9
    u_max: float = 0.9
    g_dmax: float = 0.1    # gradients up to here are fully drivable
    g_umin: float = 0.5    # gradients beyond here are fully undrivable

    def __post_init__(self) -> None:
        if not (0.0 <= self.g_dmax < self.g_umin):
            raise ValueError("need 0 <= g_dmax < g_umin")
        for v in (self.d_max, self.u_max):
            if not 0.0 <= v <= 1.0:
                raise ValueError("d_max/u_max must lie in [0, 1]")


def masses_from_gradient(g: float, cfg: GradientMassConfig) -> MassSet:
    """Map an absolute height gradient to a mass set (three-band piecewise)."""
    g = abs(float(g))
    if g <= cfg.g_dmax:
        d, u = cfg.d_max, 0.0
    elif g <= cfg.g_umin:
        d = 0.0
        u = cfg.u_max * (g - cfg.g_dmax) / (cfg.g_umin - cfg.g_dmax)
    else:
        d, u = 0.0, cfg.u_max
    return MassSet(d, u, 1.0 - d - u)


def gradient_mass_arrays(g: np.ndarray, cfg: GradientMassConfig):
    """Vectorized :func:`masses_from_gradient` over an array of gradients."""
    g = np.abs(np.asarray(g, dtype=float))
    d = np.where(g <= cfg.g_dmax, cfg.d_max, 0.0)
    ramp = cfg.u_max * (g - cfg.g_dmax) / (cfg.g_umin - cfg.g_dmax)
    u = np.where(g <= cfg.g_dmax, 0.0, np.where(g <= cfg.g_umin, ramp, cfg.u_max))
    return d, u, 1.0 - d - u
