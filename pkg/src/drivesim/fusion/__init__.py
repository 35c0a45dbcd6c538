from .association import association_weight, assignment_cost, match_contours, pairwise_distances
from .ekf import NoiseConfig, UpdateResult, predict, update
from .objects import (
    DeltaProtocolError,
    SensorKind,
    SensorObject,
    Track,
    TrackDelta,
    TrackModel,
    apply_deltas,
    delta_from_json,
    delta_to_json,
    emit_deltas,
    new_track,
    track_payload,
)
from .pipeline import FusionConfig, FusionPipeline, maintain_tracks
from .pretracking import Pretrack, PretrackConfig, pretrack_ingest, prune_pretracks
from .rules import RedundancyRule, RuleError, activation_threshold, parse_condition, parse_rules
from .splitting import connected_components, rasterize_objects, split_track

__all__ = [
    "DeltaProtocolError", "FusionConfig", "FusionPipeline", "NoiseConfig",
    "Pretrack", "PretrackConfig", "RedundancyRule", "RuleError",
    "SensorKind", "SensorObject", "Track", "TrackDelta", "TrackModel",
    "UpdateResult", "activation_threshold", "apply_deltas", "assignment_cost",
    "association_weight", "connected_components", "delta_from_json",
    "delta_to_json", "emit_deltas", "maintain_tracks", "match_contours",
    "new_track", "pairwise_distances", "parse_condition", "parse_rules",
    "predict", "pretrack_ingest", "prune_pretracks", "rasterize_objects",
    "split_track", "track_payload", "update",
]
