"""Longitudinal control: P outer loop on speed, PD inner loop on acceleration.

Throttle and brake are mutually exclusive by construction; separate inner
gain sets apply for acceleration and deceleration, and an engine-map feed
forward can preload the throttle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .params import VehicleParams


@dataclass(frozen=True)
class LongitudinalGains:
    kp_outer: float = 1.0
    kp_accel: float = 0.6
    kd_accel: float = 0.05
    kp_decel: float = 0.15
    kd_decel: float = 0.01
    a_max: float = 2.5           # m/s^2 requested ceiling
    a_min: float = -6.0
    deadband: float = 0.02


@dataclass(frozen=True)
class LongitudinalCommand:
    throttle: float
    brake: float
    gear: str = "forward"
    a_req: float = 0.0

    def __post_init__(self) -> None:
        if self.throttle * self.brake != 0.0:
            raise ValueError("throttle and brake are mutually exclusive")
        if not (0.0 <= self.throttle <= 1.0 and 0.0 <= self.brake <= 1.0):
            raise ValueError("throttle/brake must lie in [0, 1]")


@dataclass
class LongitudinalCtrlState:
    last_accel_error: float = 0.0
    d_error_filtered: float = 0.0
    a_req: float = 0.0
    derivative_tau: float = 0.1   # low-pass on the derivative term


class EngineMap:
    """Static feed-forward: throttle/brake that balance the force demand."""

    def __init__(self, params: VehicleParams):
        self.params = params

    def throttle_for(self, v: float, a_req: float) -> float:
        p = self.params
        force = p.rolling_force() + p.drag_force(v) + p.lam * p.m * max(a_req, 0.0)
        full = p.drive_force(1.0, v)
        if full <= 0:
            return 0.0
        return min(1.0, max(0.0, force / full))

    def brake_for(self, v: float, a_req: float) -> float:
        """Brake fraction sustaining a deceleration (resistances assist)."""
        p = self.params
        need = p.lam * p.m * max(-a_req, 0.0) - p.rolling_force() - p.drag_force(v)
        full = p.m * p.brake_decel_max
        return min(1.0, max(0.0, need / full))


def longitudinal_step(v_set: float, ego, dt: float,
                      state: LongitudinalCtrlState,
                      gains: LongitudinalGains | None = None,
                      feedforward: EngineMap | None = None,
                      gear: str = "forward") -> LongitudinalCommand:
    if dt <= 0:
        raise ValueError("dt must be positive")
    gains = gains or LongitudinalGains()
    v = abs(ego.speed)
    a_req = gains.kp_outer * (v_set - v)
    a_req = max(gains.a_min, min(gains.a_max, a_req))
    error = a_req - ego.acceleration
    d_raw = (error - state.last_accel_error) / dt
    alpha = dt / max(dt, state.derivative_tau)
    state.d_error_filtered += alpha * (d_raw - state.d_error_filtered)
    state.last_accel_error = error
    state.a_req = a_req
    if a_req >= 0:
        u = gains.kp_accel * error + gains.kd_accel * state.d_error_filtered
        ff = feedforward.throttle_for(v, a_req) if feedforward else 0.0
        raw = ff + u
    else:
        u = gains.kp_decel * error + gains.kd_decel * state.d_error_filtered
        ff = feedforward.brake_for(v, a_req) if feedforward else 0.0
        raw = -ff + u
    if raw > gains.deadband:
        return LongitudinalCommand(throttle=min(1.0, raw), brake=0.0,
                                   gear=gear, a_req=a_req)
    if raw < -gains.deadband:
        return LongitudinalCommand(throttle=0.0, brake=min(1.0, -raw),
                                   gear=gear, a_req=a_req)
    return LongitudinalCommand(throttle=0.0, brake=0.0, gear=gear, a_req=a_req)


def speed_governor(path_s, path_speeds, s_now: float, v: float,
                   a_comf: float = 2.0, lead_time: float = 1.1) -> float:
    """Highest speed now that still meets every slower reference ahead.

    Looks along the profile and back-propagates each upcoming speed with
    comfortable deceleration; ``lead_time`` advances the braking point to
    cover controller lag.
    """
    import math

    import numpy as np

    path_s = np.asarray(path_s, dtype=float)
    path_speeds = np.asarray(path_speeds, dtype=float)
    lead = max(v, 0.0) * lead_time
    horizon = v * v / (2.0 * a_comf) + lead + 5.0
    # only references slower than the current speed are braking constraints;
    # anything else would needlessly cap acceleration toward faster targets
    window = ((path_s >= s_now) & (path_s <= s_now + horizon)
              & (path_speeds < v - 0.01))
    if not window.any():
        return math.inf
    ds = np.maximum(path_s[window] - s_now - lead, 0.0)
    allowed = np.sqrt(path_speeds[window] ** 2 + 2.0 * a_comf * ds)
    return float(allowed.min())


@dataclass
class LongitudinalPlantState:
    v: float = 0.0
    a: float = 0.0
    drive_force: float = 0.0     # engine force after the drive-chain lag
    brake_force: float = 0.0     # brake force after the hydraulic lag


def simulate_longitudinal_plant(state: LongitudinalPlantState, throttle: float,
                                brake: float, dt: float,
                                params: VehicleParams | None = None,
                                gear: str = "forward") -> LongitudinalPlantState:
    """Force-balance drivetrain model, Euler-integrated.

    The state tracks speed magnitude; the gear lever only selects the
    travel direction at the pose level.  Static resistances never reverse
    the motion and the brake acts as a direct deceleration force.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = params or VehicleParams()
    if gear == "park":
        return LongitudinalPlantState(v=0.0, a=0.0, drive_force=0.0)
    speed = abs(state.v)
    target = p.drive_force(throttle, speed)
    lag = max(p.engine_lag, 1e-6)
    drive = state.drive_force + (target - state.drive_force) * min(1.0, dt / lag)
    resist = p.rolling_force() + p.drag_force(speed)
    brake_target = max(0.0, min(1.0, brake)) * p.m * p.brake_decel_max
    brake_lag = 0.15
    brake_force = state.brake_force + (brake_target - state.brake_force) * min(1.0, dt / brake_lag)
    net = drive - resist - brake_force
    if speed <= 1e-9 and net <= 0.0:
        return LongitudinalPlantState(v=0.0, a=0.0, drive_force=drive,
                                      brake_force=brake_force)
    a = net / (p.lam * p.m)
    new_speed = max(0.0, speed + a * dt)
    return LongitudinalPlantState(v=new_speed, a=a, drive_force=drive,
                                  brake_force=brake_force)
