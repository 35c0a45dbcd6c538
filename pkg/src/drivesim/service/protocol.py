"""Wire protocol for the cockpit stream: newline-delimited JSON, proto 1.

Server to client: ``state`` messages at up to 10 Hz.  Client to server:
``command`` messages; every command is answered with an ``ack``.
"""

from __future__ import annotations

import base64
from typing import Literal, Optional

from pydantic import BaseModel, Field

PROTO_VERSION = 1


class EgoStateMsg(BaseModel):
    x: float
    y: float
    heading: float
    v: float
    a: float = 0.0
    yaw_rate: float = 0.0


class TrackMsg(BaseModel):
    id: int
    model: str
    contour: list[list[float]]
    v: float
    a: float
    alpha: Optional[float] = None
    omega: Optional[float] = None
    t: float


class CorridorPointMsg(BaseModel):
    x: float
    y: float
    heading: float
    kappa: float
    v: float


class CorridorMsg(BaseModel):
    seq: int
    points: list[CorridorPointMsg]
    stop_flag: bool
    interrupt: Optional[str] = None


class VotesMsg(BaseModel):
    curvatures: list[float]
    combined: list[float]
    behaviors: dict[str, list[float]] = Field(default_factory=dict)


class GridRegionMsg(BaseModel):
    encoding: Literal["p6"] = "p6"
    cell_size: float
    origin: list[float]             # world x, y of the min corner
    data: str                       # base64 of the binary pixmap


class ValidatorMsg(BaseModel):
    name: str
    passed: bool
    measurement: float


class InterruptMsg(BaseModel):
    kind: str
    phase: str


class StateMessage(BaseModel):
    proto: int = PROTO_VERSION
    type: Literal["state"] = "state"
    t: float
    ego: EgoStateMsg
    tracks: list[TrackMsg] = Field(default_factory=list)
    corridor: Optional[CorridorMsg] = None
    votes: Optional[VotesMsg] = None
    grid_region: Optional[GridRegionMsg] = None
    lane_model: Optional[dict] = None
    validators: list[ValidatorMsg] = Field(default_factory=list)
    interrupts: Optional[InterruptMsg] = None
    paused: bool = False
    estop: bool = False
    completed: bool = False


class CommandMessage(BaseModel):
    proto: int = PROTO_VERSION
    type: Literal["command"] = "command"
    id: Optional[int] = None        # client correlation id, echoed in the ack
    name: str
    polygon: Optional[list[list[float]]] = None
    obstacle_id: Optional[int] = None
    action: Optional[str] = None
    ops: Optional[list[dict]] = None

    def to_runner_command(self) -> dict:
        cmd: dict = {"name": self.name}
        if self.polygon is not None:
            cmd["polygon"] = self.polygon
        if self.obstacle_id is not None:
            cmd["id"] = self.obstacle_id
        if self.action is not None:
            cmd["action"] = self.action
        if self.ops is not None:
            cmd["ops"] = self.ops
        return cmd


class AckMessage(BaseModel):
    proto: int = PROTO_VERSION
    type: Literal["ack"] = "ack"
    id: Optional[int] = None
    ok: bool
    error: Optional[str] = None
    result: Optional[dict] = None


def build_state_message(runner, grid_halfwidth: float = 20.0) -> StateMessage:
    """Snapshot the runner into one protocol state record."""
    from ..grid import Region

    ego = runner.ego_state()
    tracks = [TrackMsg(**{**rec, "id": tid})
              for tid, rec in sorted(runner.client_tracks.items())]
    corridor = None
    if runner.corridor is not None:
        corridor = CorridorMsg(
            seq=runner.corridor.seq,
            points=[CorridorPointMsg(x=p.pose.x, y=p.pose.y, heading=p.pose.heading,
                                     kappa=p.kappa, v=p.speed)
                    for p in runner.corridor.points],
            stop_flag=runner.corridor.stop_flag,
            interrupt=runner.corridor.interrupt,
        )
    votes = None
    if getattr(runner, "last_votes", None):
        votes = VotesMsg(**runner.last_votes)
    grid_region = None
    if runner.scenario.grid_enabled:
        half = int(grid_halfwidth / runner.grid.cell_size)
        ci, cj = runner.grid.world_to_cell(ego.x, ego.y)
        live = runner.grid.live_region()
        region = Region(max(ci - half, live.i0), max(cj - half, live.j0),
                        min(2 * half, live.ni), min(2 * half, live.nj))
        grid_region = GridRegionMsg(
            cell_size=runner.grid.cell_size,
            origin=[region.i0 * runner.grid.cell_size,
                    region.j0 * runner.grid.cell_size],
            data=base64.b64encode(runner.grid.export_drivability(region)).decode(),
        )
    interrupts = None
    state = runner.interrupts.state
    if state is not None:
        interrupts = InterruptMsg(kind=state.kind, phase=state.phase)
    validators = [ValidatorMsg(name=v.name, passed=v.passed,
                               measurement=(v.measurement
                                            if abs(v.measurement) < 1e9 else 1e9))
                  for v in runner._last_verdicts]
    lane_model = None
    line = runner._lane_centerline()
    if line is not None:
        lane_model = {"centerline": [[float(x), float(y)] for x, y in line[::4]]}
    return StateMessage(
        t=runner.clock.now,
        ego=EgoStateMsg(x=ego.x, y=ego.y, heading=ego.heading, v=ego.speed,
                        a=ego.acceleration, yaw_rate=ego.yaw_rate),
        tracks=tracks, corridor=corridor, votes=votes, grid_region=grid_region,
        lane_model=lane_model, validators=validators, interrupts=interrupts,
        paused=runner.paused, estop=runner.estop, completed=runner.completed,
    )
