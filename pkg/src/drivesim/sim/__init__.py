from .clock import SimClock, wall_clock_audit
from .mission import MissionRunner, RoadMask, run_mission
from .rndf import MDF, RNDF, RndfError, SpeedLimit, parse_rndf, serialize_rndf
from .route import Route, RouteError, nearest_waypoint, shortest_path
from .scenario import (
    FaultSpec,
    NoiseConfig,
    Scenario,
    ScenarioError,
    ValidatorSpec,
    VehicleSpec,
    parse_scenario,
    serialize_scenario,
)
from .sensors import GpsDrift, SENSOR_WEDGES, synthesize_sensors, terrain_rays, visible_vertices
from .validators import (
    Validator,
    Verdict,
    build_validators,
    polygon_distance,
    polygons_intersect,
    run_validators,
)
from .watchdog import StageSpec, Watchdog, WatchdogActions, watchdog_tick
from .world import (
    MotionBehavior,
    MotionBehaviorByKeyboard,
    MotionBehaviorByRNDF,
    MotionBehaviorByTrajectory,
    ObjectPosition,
    SimulatorObject,
    TrailerBehavior,
    WorldModel,
    bspline_resample,
    rectangle,
    step_world,
)

__all__ = [
    "MDF", "MissionRunner", "MotionBehavior", "MotionBehaviorByKeyboard",
    "MotionBehaviorByRNDF", "MotionBehaviorByTrajectory", "NoiseConfig",
    "ObjectPosition", "RNDF", "RndfError", "RoadMask", "Route", "RouteError",
    "Scenario", "ScenarioError", "SENSOR_WEDGES", "SimClock", "SimulatorObject",
    "SpeedLimit", "StageSpec", "TrailerBehavior", "Validator", "ValidatorSpec",
    "VehicleSpec", "Verdict", "Watchdog", "WatchdogActions", "WorldModel",
    "bspline_resample", "build_validators", "FaultSpec", "GpsDrift",
    "nearest_waypoint", "parse_rndf", "parse_scenario", "polygon_distance",
    "polygons_intersect", "rectangle", "run_mission", "run_validators",
    "serialize_rndf", "serialize_scenario", "shortest_path", "step_world",
    "synthesize_sensors", "terrain_rays", "visible_vertices",
    "wall_clock_audit", "watchdog_tick",
]
