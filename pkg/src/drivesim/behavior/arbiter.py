"""Curvature and speed arbitration over the collected behavior votes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .votes import CURVATURES, CurvatureVote, N_CURVATURES


@dataclass(frozen=True)
class Arbitration:
    kappa: float | None
    index: int | None
    combined: np.ndarray
    all_vetoed: bool


def arbitrate_curvature(votes: Sequence[tuple[CurvatureVote, float]]) -> Arbitration:
    """Weighted sum with hard-veto exclusion and a deterministic tie-break.

    Any curvature vetoed by any behavior is excluded outright; among equal
    combined scores the smaller |kappa| wins, then the negative one.
    """
    combined = np.zeros(N_CURVATURES)
    vetoed = np.zeros(N_CURVATURES, dtype=bool)
    any_active = False
    for v, weight in votes:
        if weight < 0:
            raise ValueError("behavior weights must be >= 0")
        if not v.abstained:
            any_active = True
        vetoed |= v.vetoed()
        combined = combined + weight * np.where(v.vetoed(), 0.0, v.values)
    if not any_active:
        raise ValueError("at least one behavior must cast a vote")
    allowed = ~vetoed
    if not allowed.any():
        return Arbitration(kappa=None, index=None, combined=combined, all_vetoed=True)
    # tie-break: larger score, then smaller |kappa|, then negative kappa
    order = np.lexsort((CURVATURES, np.abs(CURVATURES),
                        np.where(allowed, -combined, np.inf)))
    best = int(order[0])
    return Arbitration(kappa=float(CURVATURES[best]), index=best,
                       combined=combined, all_vetoed=False)


def arbitrate_speed(proposals: Mapping[str, float] | Iterable[float]) -> float:
    """The arbiter simply picks the lowest proposed maximum speed."""
    values = list(proposals.values()) if isinstance(proposals, Mapping) else list(proposals)
    if any(v < 0 for v in values):
        raise ValueError("speed proposals must be >= 0")
    if not values:
        return 0.0
    return float(min(values))
