from .lateral import (
    BicycleState,
    LateralCtrlState,
    LateralGains,
    TrackingError,
    WORKING_POINT_SPEED,
    corridor_tracking_error,
    lateral_step,
    simulate_bicycle_plant,
)
from .longitudinal import (
    EngineMap,
    LongitudinalCommand,
    LongitudinalCtrlState,
    LongitudinalGains,
    LongitudinalPlantState,
    longitudinal_step,
    simulate_longitudinal_plant,
    speed_governor,
)
from .params import VehicleParams

__all__ = [
    "BicycleState", "EngineMap", "LateralCtrlState", "LateralGains",
    "LongitudinalCommand", "LongitudinalCtrlState", "LongitudinalGains",
    "LongitudinalPlantState", "TrackingError", "VehicleParams",
    "WORKING_POINT_SPEED", "corridor_tracking_error", "lateral_step",
    "longitudinal_step", "simulate_bicycle_plant", "simulate_longitudinal_plant",
    "speed_governor",
]
