"""Cockpit service: the simulation behind a websocket stream.

One simulation instance runs in a background task; every connected client
receives newline-terminated JSON state records at up to 10 Hz and may
send command records, each answered with an ack.  When pacing is enabled
the loop tracks the wall clock; tests disable it to run flat out.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ..sim import MissionRunner, parse_scenario
from .protocol import AckMessage, CommandMessage, StateMessage, build_state_message

STATE_INTERVAL = 0.1   # simulated seconds between state broadcasts


class SimulationService:
    def __init__(self, scenario, pace: bool = True):
        self.scenario = scenario
        self.pace = pace
        self.runner = MissionRunner(scenario)
        self.clients: set[WebSocket] = set()
        self._task: asyncio.Task | None = None
        self.running = False

    async def start(self) -> None:
        self.running = True
        self._task = asyncio.create_task(self._loop())

    async def stop(self) -> None:
        self.running = False
        if self._task is not None:
            self._task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._task

    async def _loop(self) -> None:
        ticks_per_state = max(1, int(STATE_INTERVAL / self.scenario.dt))
        max_ticks = int(self.scenario.duration / self.scenario.dt)
        while self.running and self.runner.clock.tick < max_ticks:
            for _ in range(ticks_per_state):
                self.runner.step()
                if self.runner.completed or self.runner.aborted:
                    break
            await self.broadcast_state()
            if self.runner.completed or self.runner.aborted:
                break
            await asyncio.sleep(STATE_INTERVAL if self.pace else 0)
        await self.broadcast_state()

    async def broadcast_state(self) -> None:
        if not self.clients:
            return
        line = state_line(self.runner)
        dead = []
        for ws in list(self.clients):
            try:
                await ws.send_text(line)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self.clients.discard(ws)

    def handle_command_line(self, line: str) -> AckMessage:
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            return AckMessage(ok=False, error=f"not valid JSON: {e}")
        if record.get("proto", 1) != 1:
            return AckMessage(id=record.get("id"), ok=False,
                              error=f"unsupported proto {record.get('proto')!r}")
        try:
            cmd = CommandMessage(**record)
        except Exception as e:
            return AckMessage(id=record.get("id"), ok=False, error=str(e))
        result = self.runner._apply_command(cmd.to_runner_command())
        return AckMessage(id=cmd.id, ok=bool(result.get("ok")),
                          error=result.get("error"),
                          result={k: v for k, v in result.items()
                                  if k not in ("ok", "error")} or None)


def state_line(runner) -> str:
    return build_state_message(runner).model_dump_json(exclude_none=True) + "\n"


def make_app(scenario, pace: bool = True, ui_dir: str | None = None) -> FastAPI:
    service = SimulationService(scenario, pace=pace)

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        await service.start()
        yield
        await service.stop()

    app = FastAPI(title="drivesim cockpit service", lifespan=lifespan)
    app.state.service = service

    @app.get("/health")
    def health():
        return {"ok": True, "t": service.runner.clock.now,
                "completed": service.runner.completed}

    @app.get("/scenario")
    def scenario_info():
        return {"name": scenario.name, "seed": scenario.seed, "dt": scenario.dt,
                "duration": scenario.duration, "proto": 1}

    @app.get("/rndf")
    def rndf_text():
        from fastapi.responses import PlainTextResponse
        from ..sim import serialize_rndf

        return PlainTextResponse(serialize_rndf(service.runner.rndf))

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        service.clients.add(ws)
        try:
            await ws.send_text(state_line(service.runner))
            while True:
                text = await ws.receive_text()
                for line in text.splitlines():
                    if not line.strip():
                        continue
                    ack = service.handle_command_line(line)
                    await ws.send_text(ack.model_dump_json(exclude_none=True) + "\n")
        except WebSocketDisconnect:
            pass
        finally:
            service.clients.discard(ws)

    return app


def make_app_from_path(path: str, pace: bool = True,
                       ui_dir: str | None = None) -> FastAPI:
    p = Path(path)
    scenario = parse_scenario(p.read_text(), base_dir=p.parent)
    return make_app(scenario, pace=pace, ui_dir=ui_dir)
