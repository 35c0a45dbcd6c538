from .arbiter import Arbitration, arbitrate_curvature, arbitrate_speed
from .corridor import (
    DEFAULT_WEIGHTS,
    PlanConfig,
    PlanContext,
    TrajectoryCorridor,
    TrajectoryPoint,
    plan_corridor,
)
from .interrupts import (
    Directive,
    InterruptContext,
    InterruptManager,
    InterruptState,
    PRIORITY,
    shape_speeds,
)
from .votes import (
    BEHAVIOR_KINDS,
    CURVATURES,
    CurvatureVote,
    KAPPA_MAX,
    N_CURVATURES,
    ObstacleView,
    STRAIGHT_INDEX,
    VoteConfig,
    VoteContext,
    abstain,
    advance_pose,
    arc_points,
    curvature_through,
    vote,
)

__all__ = [
    "Arbitration", "BEHAVIOR_KINDS", "CURVATURES", "CurvatureVote",
    "DEFAULT_WEIGHTS", "Directive", "InterruptContext", "InterruptManager",
    "InterruptState", "KAPPA_MAX", "N_CURVATURES", "ObstacleView",
    "PRIORITY", "PlanConfig", "PlanContext", "STRAIGHT_INDEX",
    "TrajectoryCorridor", "TrajectoryPoint", "VoteConfig", "VoteContext",
    "abstain", "advance_pose", "arbitrate_curvature", "arbitrate_speed",
    "arc_points", "curvature_through", "plan_corridor", "shape_speeds", "vote",
]
