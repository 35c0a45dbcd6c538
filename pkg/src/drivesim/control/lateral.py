"""Lateral control and the linear single-track (bicycle) plant.

Two parallel proportional loops on track error and track-angle deviation
plus a bicycle-model pilot term for the reference curvature; gains are
scheduled around the 30 km/h working point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import Pose2, normalize_angle
from .params import VehicleParams

WORKING_POINT_SPEED = 30.0 / 3.6   # m/s


@dataclass(frozen=True)
class LateralGains:
    k_d: float = 0.12            # rad per meter of track error
    k_psi: float = 1.3           # rad per rad of track-angle deviation
    schedule_min: float = 0.5
    schedule_max: float = 2.0
    preview_time: float = 0.45   # s of curvature look-ahead for the pilot term


@dataclass
class LateralCtrlState:
    delta_cmd: float = 0.0
    no_corridor: bool = False


@dataclass(frozen=True)
class TrackingError:
    d: float                     # signed track error, left of path positive
    psi_rel: float               # heading minus desired track angle
    kappa: float                 # reference curvature at the projection
    v_ref: float                 # reference speed at the projection
    kappa_preview: float = 0.0   # curvature a short distance ahead
    v_ref_preview: float = 0.0   # reference speed at the preview point


def corridor_tracking_error(path_xy: np.ndarray, path_heading: np.ndarray,
                            path_kappa: np.ndarray, path_speed: np.ndarray,
                            pose: Pose2, preview_s: float = 0.0) -> TrackingError:
    """Project the pose onto the reference polyline and measure the errors."""
    pts = np.asarray(path_xy, dtype=float)
    if len(pts) == 1:
        seg_i, t = 0, 0.0
        tangent = np.array([math.cos(path_heading[0]), math.sin(path_heading[0])])
        proj = pts[0]
    else:
        a = pts[:-1]
        ab = pts[1:] - a
        sq = np.maximum((ab ** 2).sum(axis=1), 1e-12)
        rel = np.array([pose.x, pose.y]) - a
        tt = np.clip((rel * ab).sum(axis=1) / sq, 0.0, 1.0)
        proj_all = a + tt[:, None] * ab
        d_all = np.hypot(proj_all[:, 0] - pose.x, proj_all[:, 1] - pose.y)
        seg_i = int(np.argmin(d_all))
        t = float(tt[seg_i])
        proj = proj_all[seg_i]
        tangent = ab[seg_i] / math.sqrt(sq[seg_i])
    nx, ny = -tangent[1], tangent[0]           # left normal
    d = (pose.x - proj[0]) * nx + (pose.y - proj[1]) * ny
    i0 = min(seg_i, len(path_heading) - 1)
    i1 = min(seg_i + 1, len(path_heading) - 1)
    heading_ref = normalize_angle(path_heading[i0]
                                  + t * normalize_angle(path_heading[i1] - path_heading[i0]))
    kappa = float(path_kappa[i0] + t * (path_kappa[i1] - path_kappa[i0]))
    v_ref = float(path_speed[i0] + t * (path_speed[i1] - path_speed[i0]))
    psi_rel = normalize_angle(pose.heading - heading_ref)
    kappa_prev = kappa
    v_prev = v_ref
    if preview_s > 0.0 and len(pts) > 1:
        seg_len = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        s_here = cum[seg_i] + t * seg_len[seg_i]
        j = min(int(np.searchsorted(cum, s_here + preview_s)), len(path_kappa) - 1)
        kappa_prev = float(path_kappa[j])
        v_prev = float(path_speed[j])
    return TrackingError(d=float(d), psi_rel=psi_rel, kappa=kappa, v_ref=v_ref,
                         kappa_preview=kappa_prev, v_ref_preview=v_prev)


def lateral_step(corridor, ego, dt: float, state: LateralCtrlState,
                 params: VehicleParams | None = None,
                 gains: LateralGains | None = None) -> float:
    """Road-wheel steering command for the current corridor and ego state."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    params = params or VehicleParams()
    gains = gains or LateralGains()
    points = getattr(corridor, "points", corridor)
    if not points:
        state.no_corridor = True
        return state.delta_cmd
    state.no_corridor = False
    xy = np.array([[p.pose.x, p.pose.y] for p in points])
    heading = np.array([p.pose.heading for p in points])
    kappa = np.array([p.kappa for p in points])
    speed = np.array([p.speed for p in points])
    err = corridor_tracking_error(xy, heading, kappa, speed,
                                  Pose2(ego.x, ego.y, ego.heading),
                                  preview_s=abs(ego.speed) * gains.preview_time)
    schedule = WORKING_POINT_SPEED / max(abs(ego.speed), 1.0)
    schedule = min(gains.schedule_max, max(gains.schedule_min, schedule))
    delta_ff = params.steady_state_steer(err.kappa_preview, abs(ego.speed))
    # in a steady curve the body heading sits a side-slip angle off the track
    # tangent; the pilot control supplies that offset so the heading loop
    # does not fight it
    beta_ss = params.steady_state_side_slip(err.kappa, abs(ego.speed))
    delta = delta_ff - schedule * (gains.k_d * err.d
                                   + gains.k_psi * (err.psi_rel + beta_ss))
    delta = max(-params.delta_max, min(params.delta_max, delta))
    state.delta_cmd = delta
    return delta


@dataclass
class BicycleState:
    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    beta: float = 0.0            # side slip angle
    yaw_rate: float = 0.0
    delta: float = 0.0           # road-wheel angle after actuator lag


def _derivs(s: BicycleState, v: float, p: VehicleParams):
    cv, ch = p.c_av, p.c_ah
    lv, lh = p.l_v, p.l_h
    b_dot = (-(cv + ch) / (p.m * v) * s.beta
             + ((ch * lh - cv * lv) / (p.m * v * v) - 1.0) * s.yaw_rate
             + cv / (p.m * v) * s.delta)
    r_dot = ((ch * lh - cv * lv) / p.theta * s.beta
             - (cv * lv * lv + ch * lh * lh) / (p.theta * v) * s.yaw_rate
             + cv * lv / p.theta * s.delta)
    return b_dot, r_dot


def simulate_bicycle_plant(state: BicycleState, delta_cmd: float, v: float,
                           dt: float, params: VehicleParams | None = None,
                           gear: str = "forward") -> BicycleState:
    """Advance the single-track model by dt (midpoint integration).

    ``delta_cmd`` is the commanded road-wheel angle; the actuator applies
    a first-order lag (column gain i_l wrapped by the command interface).
    Below 0.5 m/s the linear model is singular and a kinematic bicycle
    takes over.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = params or VehicleParams()
    s = BicycleState(**vars(state))
    delta_cmd = max(-p.delta_max, min(p.delta_max, delta_cmd))
    # steering actuator lag
    s.delta += (delta_cmd - s.delta) * (dt / p.t_l) if p.t_l > 0 else 0.0
    direction = -1.0 if gear == "reverse" else 1.0
    v_eff = abs(v)
    if v_eff < 0.5 or gear == "reverse":
        # kinematic bicycle: linear model is singular near standstill and
        # its slip dynamics only describe forward travel
        s.beta = 0.0
        s.yaw_rate = direction * v_eff * math.tan(s.delta) / p.wheelbase
        s.psi = normalize_angle(s.psi + s.yaw_rate * dt)
        s.x += direction * v_eff * math.cos(s.psi) * dt
        s.y += direction * v_eff * math.sin(s.psi) * dt
        return s
    # the side-slip dynamics stiffen as 1/v: sub-step to stay stable
    h_stable = 0.5 * p.m * v_eff / (p.c_av + p.c_ah)
    n_sub = max(1, min(64, int(math.ceil(dt / max(h_stable, 1e-4)))))
    h = dt / n_sub
    for _ in range(n_sub):
        b1, r1 = _derivs(s, v_eff, p)
        mid = BicycleState(x=s.x, y=s.y, psi=s.psi,
                           beta=s.beta + 0.5 * h * b1,
                           yaw_rate=s.yaw_rate + 0.5 * h * r1,
                           delta=s.delta)
        b2, r2 = _derivs(mid, v_eff, p)
        s.beta += h * b2
        s.yaw_rate += h * r2
        course = s.psi + s.beta if direction > 0 else s.psi - s.beta
        s.x += direction * v_eff * math.cos(course) * h
        s.y += direction * v_eff * math.sin(course) * h
        s.psi = normalize_angle(s.psi + direction * s.yaw_rate * h)
    return s
