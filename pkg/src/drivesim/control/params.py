"""Vehicle parameters for the drivetrain and single-track models.

Passat-class engineering defaults; every figure is tunable configuration,
not ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class VehicleParams:
    # longitudinal / drivetrain
    m: float = 1700.0            # mass, kg
    g: float = 9.81
    f_r: float = 0.012           # rolling friction factor
    c_w: float = 0.3             # air resistance factor
    area: float = 2.2            # cross-sectional area, m^2
    rho: float = 1.2041          # air density, kg/m^3
    lam: float = 1.05            # rotating-mass factor
    r0: float = 0.316            # wheel radius unloaded, m
    r_loaded: float = 0.316      # wheel radius loaded, m
    eta_k: float = 0.9           # gear box efficiency
    i_k: float = 8.0             # overall gear transmission ratio
    engine_torque_max: float = 280.0   # N*m, flat 1D throttle map
    brake_decel_max: float = 8.0       # m/s^2 at full brake
    plant_lag: float = 0.6       # s, inner loop PT1 approximation
    engine_lag: float = 0.4      # s, drive-chain force response lag

    # lateral / bicycle model
    c_av: float = 1.0e5          # front skew stiffness, N/rad
    c_ah: float = 1.0e5          # rear skew stiffness, N/rad
    l_v: float = 1.1             # front axle to center of mass, m
    l_h: float = 1.6             # rear axle to center of mass, m
    theta: float = 2800.0        # yaw moment of inertia, kg*m^2
    i_l: float = 1.0 / 18.0      # steering column ratio
    t_l: float = 0.1             # steering actuator lag, s
    delta_max: float = 0.5       # road-wheel angle limit, rad

    def __post_init__(self) -> None:
        for name in ("m", "g", "c_w", "area", "rho", "lam", "r0", "r_loaded",
                     "eta_k", "i_k", "c_av", "c_ah", "l_v", "l_h", "theta",
                     "i_l", "t_l"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def wheelbase(self) -> float:
        return self.l_v + self.l_h

    def rolling_force(self) -> float:
        return self.f_r * self.m * self.g

    def drag_force(self, v: float) -> float:
        return self.c_w * self.area * 0.5 * self.rho * v * v

    def drive_force(self, throttle: float, v: float) -> float:
        """Invert the engine-torque relation: wheel force from throttle."""
        torque = max(0.0, min(1.0, throttle)) * self.engine_torque_max
        return torque * self.eta_k * self.i_k / self.r_loaded

    def engine_speed(self, v: float) -> float:
        """Engine revolutions per second for a road speed (no slip)."""
        return v * self.i_k / (2.0 * 3.141592653589793 * self.r0)

    def steady_state_steer(self, kappa: float, v: float) -> float:
        """Road-wheel angle holding a constant-curvature track (bicycle model)."""
        L = self.wheelbase
        understeer = self.m * (self.l_h * self.c_ah - self.l_v * self.c_av) / (
            self.c_av * self.c_ah * L)
        return kappa * (L + understeer * v * v)

    def steady_state_side_slip(self, kappa: float, v: float) -> float:
        """Side-slip angle on a constant-curvature track (bicycle model)."""
        return kappa * (self.l_h - self.m * self.l_v * v * v
                        / (self.c_ah * self.wheelbase))
