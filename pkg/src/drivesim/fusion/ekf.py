"""Multi-contour-point extended Kalman filter.

All contour points of a track share one motion state and one covariance,
so the Kalman gain is computed once per update cycle; each matched point
is corrected by the position components of its own correction vector and
the shared states by the mean correction over all matches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import normalize_angle
from .objects import SensorKind, SensorObject, Track, TrackModel

_OMEGA_EPS = 1e-6


@dataclass(frozen=True)
class NoiseConfig:
    """Process / measurement noise (diagonal); R can vary per sensor kind."""

    q_pos: float = 0.1
    q_v: float = 0.25
    q_a: float = 0.1
    q_alpha: float = 0.01
    q_omega: float = 0.01
    r_pos: float = 0.1
    r_vel: float = 0.25
    r_pos_by_kind: dict = field(default_factory=dict)
    r_vel_by_kind: dict = field(default_factory=dict)

    def Q(self, model: TrackModel, dt: float) -> np.ndarray:
        diag = [self.q_pos, self.q_pos, self.q_v, self.q_a]
        if model is TrackModel.SixD:
            diag += [self.q_alpha, self.q_omega]
        return np.diag(diag) * dt

    def R(self, kind: SensorKind | None = None) -> np.ndarray:
        rp = self.r_pos_by_kind.get(kind, self.r_pos)
        rv = self.r_vel_by_kind.get(kind, self.r_vel)
        return np.diag([rp, rp, rv, rv])


def _displacement_6d(v: float, a: float, alpha: float, omega: float, dt: float):
    """Closed-form constant-acceleration constant-turn-rate displacement."""
    if abs(omega) < _OMEGA_EPS:
        ds = v * dt + 0.5 * a * dt * dt
        return ds * math.cos(alpha), ds * math.sin(alpha)
    theta = alpha + omega * dt
    inv = 1.0 / (omega * omega)
    dx = inv * ((v + a * dt) * omega * math.sin(theta) + a * math.cos(theta)
                - v * omega * math.sin(alpha) - a * math.cos(alpha))
    dy = inv * (-(v + a * dt) * omega * math.cos(theta) + a * math.sin(theta)
                + v * omega * math.cos(alpha) - a * math.sin(alpha))
    return dx, dy


def _jacobian_6d(v, a, alpha, omega, dt) -> np.ndarray:
    F = np.eye(6)
    dx, dy = _displacement_6d(v, a, alpha, omega, dt)
    if abs(omega) < _OMEGA_EPS:
        c, s = math.cos(alpha), math.sin(alpha)
        F[0, 2] = dt * c
        F[0, 3] = 0.5 * dt * dt * c
        F[0, 4] = -dy
        F[0, 5] = -s * (v * dt * dt / 2.0 + a * dt ** 3 / 3.0)
        F[1, 2] = dt * s
        F[1, 3] = 0.5 * dt * dt * s
        F[1, 4] = dx
        F[1, 5] = c * (v * dt * dt / 2.0 + a * dt ** 3 / 3.0)
    else:
        theta = alpha + omega * dt
        st, ct = math.sin(theta), math.cos(theta)
        sa, ca = math.sin(alpha), math.cos(alpha)
        inv = 1.0 / (omega * omega)
        F[0, 2] = (st - sa) / omega
        F[0, 3] = inv * (dt * omega * st + ct - ca)
        F[0, 4] = -dy
        F[0, 5] = (-2.0 * dx / omega
                   + inv * ((v + a * dt) * (st + omega * dt * ct)
                            - a * dt * st - v * sa))
        F[1, 2] = (ca - ct) / omega
        F[1, 3] = inv * (-dt * omega * ct + st - sa)
        F[1, 4] = dx
        F[1, 5] = (-2.0 * dy / omega
                   + inv * (-(v + a * dt) * (ct - omega * dt * st)
                            + a * dt * ct + v * ca))
    F[2, 3] = dt
    F[4, 5] = dt
    return F


def predict(track: Track, dt: float, noise: NoiseConfig | None = None) -> Track:
    """Advance all contour points along the shared motion state."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    noise = noise or NoiseConfig()
    out = track.copy()
    if track.model is TrackModel.SixD:
        dx, dy = _displacement_6d(track.v, track.a, track.alpha, track.omega, dt)
        F = _jacobian_6d(track.v, track.a, track.alpha, track.omega, dt)
        out.alpha = normalize_angle(track.alpha + track.omega * dt)
    else:
        ds = track.v * dt + 0.5 * track.a * dt * dt
        c, s = math.cos(track.alpha), math.sin(track.alpha)
        dx, dy = ds * c, ds * s
        F = np.eye(4)
        F[0, 2] = dt * c
        F[0, 3] = 0.5 * dt * dt * c
        F[1, 2] = dt * s
        F[1, 3] = 0.5 * dt * dt * s
        F[2, 3] = dt
    out.points = track.points + np.array([dx, dy])
    out.v = track.v + track.a * dt
    out.P = F @ track.P @ F.T + noise.Q(track.model, dt)
    return out


class SingularInnovation(Exception):
    """Raised internally when S is not invertible; update() converts to a flag."""


def _output_jacobian(track: Track) -> np.ndarray:
    dim = track.state_dim
    H = np.zeros((4, dim))
    H[0, 0] = 1.0
    H[1, 1] = 1.0
    c, s = math.cos(track.alpha), math.sin(track.alpha)
    H[2, 2] = c
    H[3, 2] = s
    if track.model is TrackModel.SixD:
        H[2, 4] = -track.v * s
        H[3, 4] = track.v * c
    return H


@dataclass
class UpdateResult:
    track: Track
    skipped: bool = False          # singular innovation covariance
    appended_points: int = 0


def update(track: Track, meas: SensorObject, assignment: list[tuple[int, int]],
           noise: NoiseConfig | None = None,
           new_point_gate: float = 2.0) -> UpdateResult:
    """Correct a predicted track with an associated sensor object.

    ``assignment`` pairs tracked point k with measured point l (from
    :func:`match_contours`).  Pairs farther apart than ``new_point_gate``
    are treated as unmatched and their measured points are appended to the
    contour as new points.
    """
    if not assignment:
        raise ValueError("update requires a non-empty assignment")
    noise = noise or NoiseConfig()
    out = track.copy()
    dim = track.state_dim
    H = _output_jacobian(track)
    R = noise.R(meas.sensor_kind)
    S = H @ track.P @ H.T + R
    # singular S -> skip the update, raise the diagnostics flag
    if abs(np.linalg.det(S)) < 1e-18 or np.linalg.cond(S) > 1e14:
        return UpdateResult(track=out, skipped=True)
    K = track.P @ H.T @ np.linalg.inv(S)
    c, s = math.cos(track.alpha), math.sin(track.alpha)
    vx, vy = track.v * c, track.v * s

    matched: list[tuple[int, int]] = []
    unmatched_meas: list[int] = []
    for k, l in assignment:
        d = math.hypot(track.points[k, 0] - meas.points[l, 0],
                       track.points[k, 1] - meas.points[l, 1])
        if d <= new_point_gate:
            matched.append((k, l))
        else:
            unmatched_meas.append(l)

    if matched:
        r_sum = np.zeros(dim)
        pos_corr: dict[int, list[np.ndarray]] = {}
        for k, l in matched:
            innov = np.array([
                meas.points[l, 0] - track.points[k, 0],
                meas.points[l, 1] - track.points[k, 1],
                meas.velocity[0] - vx,
                meas.velocity[1] - vy,
            ])
            r = K @ innov
            r_sum += r
            pos_corr.setdefault(k, []).append(r[:2])
        r_mean = r_sum / len(matched)
        for k, corrs in pos_corr.items():
            out.points[k] = track.points[k] + np.mean(corrs, axis=0)
            out.point_update_count[k] += 1
            out.point_update_t[k] = meas.timestamp
        out.v = track.v + r_mean[2]
        out.a = track.a + r_mean[3]
        if track.model is TrackModel.SixD:
            out.alpha = normalize_angle(track.alpha + r_mean[4])
            out.omega = track.omega + r_mean[5]
        P = (np.eye(dim) - K @ H) @ track.P
        out.P = 0.5 * (P + P.T)

    appended = 0
    for l in unmatched_meas:
        out.points = np.vstack([out.points, meas.points[l]])
        out.point_update_t = np.append(out.point_update_t, meas.timestamp)
        out.point_update_count = np.append(out.point_update_count, 1)
        appended += 1
    out.last_track_update = meas.timestamp
    return UpdateResult(track=out, appended_points=appended)
