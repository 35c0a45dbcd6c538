"""Scenario files: everything one virtual test drive needs, in YAML."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..geometry import Polygon2
from .rndf import MDF, RNDF, SpeedLimit, parse_rndf


class ScenarioError(ValueError):
    pass


@dataclass
class NoiseConfig:
    position_sigma: float = 0.0
    gps_drift_sigma: float = 0.0      # per-step random-walk increment
    dropout_p: float = 0.0
    visibility: float = 200.0

    def validate(self) -> None:
        if not 0.0 <= self.dropout_p <= 1.0:
            raise ScenarioError("noise.dropout_p must lie in [0, 1]")
        for key in ("position_sigma", "gps_drift_sigma", "visibility"):
            if getattr(self, key) < 0:
                raise ScenarioError(f"noise.{key} must be >= 0")


@dataclass
class ValidatorSpec:
    kind: str
    threshold: float | None = None
    tolerance: float = 0.0
    grace: float = 0.0
    limit: float | None = None

    KNOWN = ("min_clearance", "lane_departure", "speed_limit", "collision",
             "checkpoint_completion", "timeout")

    def validate(self) -> None:
        if self.kind not in self.KNOWN:
            raise ScenarioError(f"unknown validator kind {self.kind!r}")
        for key in ("threshold", "tolerance", "grace", "limit"):
            value = getattr(self, key)
            if value is not None and not isinstance(value, (int, float)):
                raise ScenarioError(f"validator {self.kind}: {key} must be a number")


@dataclass
class VehicleSpec:
    rndf: str | None = None           # private route for ByRNDF vehicles
    speed: float = 5.0
    start_offset: float = 0.0         # meters along its route
    length: float = 4.4
    width: float = 1.8
    behavior: str = "rndf"            # rndf | keyboard
    loop: bool = True


@dataclass
class FaultSpec:
    stage: str
    at: float
    duration: float = 1.0
    kind: str = "silence"             # silence | slave_silence

    def validate(self) -> None:
        if self.kind not in ("silence", "slave_silence"):
            raise ScenarioError(f"unknown fault kind {self.kind!r}")


@dataclass
class EgoSpec:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0
    length: float = 4.4
    width: float = 1.8


@dataclass
class Scenario:
    rndf_path: str
    mdf: MDF
    name: str = "scenario"
    lane_rndf_path: str | None = None
    ego: EgoSpec = field(default_factory=EgoSpec)
    static_obstacles: list[list[tuple[float, float]]] = field(default_factory=list)
    vehicles: list[VehicleSpec] = field(default_factory=list)
    drivability_image: str | None = None
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    validators: list[ValidatorSpec] = field(default_factory=list)
    faults: list[FaultSpec] = field(default_factory=list)
    seed: int = 0
    dt: float = 0.02
    duration: float = 120.0
    grid_enabled: bool = True
    area_vision_enabled: bool = False
    off_road_height: float = 0.25
    base_dir: Path = field(default_factory=Path)

    def load_rndf(self) -> RNDF:
        return parse_rndf((self.base_dir / self.rndf_path).read_text())

    def load_lane_rndf(self) -> RNDF | None:
        if self.lane_rndf_path is None:
            return None
        return parse_rndf((self.base_dir / self.lane_rndf_path).read_text())

    def obstacle_polygons(self) -> list[Polygon2]:
        return [Polygon2.from_points(p) for p in self.static_obstacles]


_TOP_KEYS = {"name", "rndf", "lane_rndf", "mdf", "ego", "obstacles", "vehicles",
             "drivability_image", "noise", "validators", "faults", "seed", "dt",
             "duration", "grid", "area_vision", "off_road_height"}


def parse_scenario(text: str, base_dir: Path | str = ".") -> Scenario:
    try:
        raw = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as e:
        raise ScenarioError(f"not valid YAML: {e}") from None
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a mapping")
    unknown = raw.keys() - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
    if "rndf" not in raw:
        raise ScenarioError("missing required key: rndf")
    if "mdf" not in raw or not isinstance(raw["mdf"], dict):
        raise ScenarioError("missing required key: mdf (mapping)")
    mdf_raw = raw["mdf"]
    if "checkpoints" not in mdf_raw or not isinstance(mdf_raw["checkpoints"], list):
        raise ScenarioError("mdf.checkpoints must be a list")
    limits = []
    for i, sl in enumerate(mdf_raw.get("speed_limits", []) or []):
        if not isinstance(sl, dict) or "segment" not in sl or "max_mps" not in sl:
            raise ScenarioError(f"mdf.speed_limits[{i}] needs segment and max_mps")
        limits.append(SpeedLimit(segment=int(sl["segment"]),
                                 max_mps=float(sl["max_mps"])))
    mdf = MDF(checkpoints=[int(c) for c in mdf_raw["checkpoints"]],
              speed_limits=limits,
              default_max_mps=float(mdf_raw.get("default_max_mps", 13.4)))

    ego_raw = raw.get("ego", {}) or {}
    ego = EgoSpec(x=float(ego_raw.get("x", 0.0)), y=float(ego_raw.get("y", 0.0)),
                  heading=float(ego_raw.get("heading", 0.0)),
                  speed=float(ego_raw.get("speed", 0.0)),
                  length=float(ego_raw.get("length", 4.4)),
                  width=float(ego_raw.get("width", 1.8)))

    obstacles = []
    for i, poly in enumerate(raw.get("obstacles", []) or []):
        if not isinstance(poly, list) or len(poly) < 3:
            raise ScenarioError(f"obstacles[{i}] must be a list of >= 3 [x, y] points")
        try:
            pts = [(float(p[0]), float(p[1])) for p in poly]
            Polygon2.from_points(pts)
        except (TypeError, IndexError, ValueError) as e:
            raise ScenarioError(f"obstacles[{i}]: {e}") from None
        obstacles.append(pts)

    vehicles = []
    for i, v in enumerate(raw.get("vehicles", []) or []):
        if not isinstance(v, dict):
            raise ScenarioError(f"vehicles[{i}] must be a mapping")
        spec = VehicleSpec(rndf=v.get("rndf"), speed=float(v.get("speed", 5.0)),
                           start_offset=float(v.get("start_offset", 0.0)),
                           length=float(v.get("length", 4.4)),
                           width=float(v.get("width", 1.8)),
                           behavior=str(v.get("behavior", "rndf")),
                           loop=bool(v.get("loop", True)))
        if spec.behavior not in ("rndf", "keyboard"):
            raise ScenarioError(f"vehicles[{i}].behavior must be rndf or keyboard")
        if spec.behavior == "rndf" and not spec.rndf:
            raise ScenarioError(f"vehicles[{i}] with rndf behavior needs an rndf path")
        vehicles.append(spec)

    noise_raw = raw.get("noise", {}) or {}
    unknown_noise = noise_raw.keys() - {"position_sigma", "gps_drift_sigma",
                                        "dropout_p", "visibility"}
    if unknown_noise:
        raise ScenarioError(f"unknown noise keys: {sorted(unknown_noise)}")
    noise = NoiseConfig(**{k: float(v) for k, v in noise_raw.items()})
    noise.validate()

    validators = []
    for i, v in enumerate(raw.get("validators", []) or []):
        if not isinstance(v, dict) or "kind" not in v:
            raise ScenarioError(f"validators[{i}] needs a kind")
        extra = v.keys() - {"kind", "threshold", "tolerance", "grace", "limit"}
        if extra:
            raise ScenarioError(f"validators[{i}]: unknown keys {sorted(extra)}")
        for num_key in ("threshold", "tolerance", "grace", "limit"):
            if num_key in v and not isinstance(v[num_key], (int, float)):
                raise ScenarioError(
                    f"validators[{i}].{num_key} must be a number, got {v[num_key]!r}")
        spec = ValidatorSpec(kind=v["kind"],
                             threshold=v.get("threshold"),
                             tolerance=float(v.get("tolerance", 0.0)),
                             grace=float(v.get("grace", 0.0)),
                             limit=v.get("limit"))
        spec.validate()
        validators.append(spec)

    faults = []
    for i, f in enumerate(raw.get("faults", []) or []):
        if not isinstance(f, dict) or "stage" not in f or "at" not in f:
            raise ScenarioError(f"faults[{i}] needs stage and at")
        spec = FaultSpec(stage=str(f["stage"]), at=float(f["at"]),
                         duration=float(f.get("duration", 1.0)),
                         kind=str(f.get("kind", "silence")))
        spec.validate()
        faults.append(spec)

    dt = float(raw.get("dt", 0.02))
    if dt <= 0:
        raise ScenarioError("dt must be positive")

    return Scenario(
        rndf_path=str(raw["rndf"]), mdf=mdf,
        name=str(raw.get("name", "scenario")),
        lane_rndf_path=raw.get("lane_rndf"),
        ego=ego, static_obstacles=obstacles, vehicles=vehicles,
        drivability_image=raw.get("drivability_image"),
        noise=noise, validators=validators, faults=faults,
        seed=int(raw.get("seed", 0)), dt=dt,
        duration=float(raw.get("duration", 120.0)),
        grid_enabled=bool(raw.get("grid", True)),
        area_vision_enabled=bool(raw.get("area_vision", False)),
        off_road_height=float(raw.get("off_road_height", 0.25)),
        base_dir=Path(base_dir),
    )


def serialize_scenario(s: Scenario) -> str:
    doc: dict = {
        "name": s.name,
        "rndf": s.rndf_path,
        "mdf": {"checkpoints": s.mdf.checkpoints,
                "speed_limits": [{"segment": sl.segment, "max_mps": sl.max_mps}
                                 for sl in s.mdf.speed_limits],
                "default_max_mps": s.mdf.default_max_mps},
        "ego": {"x": s.ego.x, "y": s.ego.y, "heading": s.ego.heading,
                "speed": s.ego.speed, "length": s.ego.length, "width": s.ego.width},
        "seed": s.seed, "dt": s.dt, "duration": s.duration,
        "grid": s.grid_enabled, "area_vision": s.area_vision_enabled,
        "off_road_height": s.off_road_height,
        "noise": {"position_sigma": s.noise.position_sigma,
                  "gps_drift_sigma": s.noise.gps_drift_sigma,
                  "dropout_p": s.noise.dropout_p,
                  "visibility": s.noise.visibility},
    }
    if s.lane_rndf_path:
        doc["lane_rndf"] = s.lane_rndf_path
    if s.drivability_image:
        doc["drivability_image"] = s.drivability_image
    if s.static_obstacles:
        doc["obstacles"] = [[[x, y] for x, y in poly] for poly in s.static_obstacles]
    if s.vehicles:
        doc["vehicles"] = [
            {"rndf": v.rndf, "speed": v.speed, "start_offset": v.start_offset,
             "length": v.length, "width": v.width, "behavior": v.behavior,
             "loop": v.loop}
            for v in s.vehicles]
    if s.validators:
        doc["validators"] = []
        for v in s.validators:
            rec: dict = {"kind": v.kind}
            if v.threshold is not None:
                rec["threshold"] = v.threshold
            if v.tolerance:
                rec["tolerance"] = v.tolerance
            if v.grace:
                rec["grace"] = v.grace
            if v.limit is not None:
                rec["limit"] = v.limit
            doc["validators"].append(rec)
    if s.faults:
        doc["faults"] = [{"stage": f.stage, "at": f.at, "duration": f.duration,
                          "kind": f.kind} for f in s.faults]
    return yaml.safe_dump(doc, sort_keys=False)
