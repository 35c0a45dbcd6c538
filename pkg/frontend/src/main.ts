/**
 * Browser entry point: wires the websocket stream, canvas renderer,
 * keyboard control, the obstacle tool and the waypoint editor.
 */

import { Connection } from "./connection.js";
import { keyToCommand } from "./keymap.js";
import { StateMessage } from "./protocol.js";
import { renderState } from "./render.js";
import { ObstacleTool } from "./tools.js";
import {
  canvasToWorld,
  defaultViewState,
  pan,
  toggleLayer,
  zoomAt,
  ViewState,
  Layers,
} from "./viewState.js";
import { RndfEditor } from "./rndfEditor.js";

export function startCockpit(root: Document = document): void {
  const canvas = root.getElementById("scene") as HTMLCanvasElement;
  const statusEl = root.getElementById("status")!;
  const logEl = root.getElementById("command-log")!;
  const ctx = canvas.getContext("2d")!;
  const off = root.createElement("canvas") as HTMLCanvasElement;
  const offCtx = off.getContext("2d")!;

  let view: ViewState = defaultViewState();
  let lastState: StateMessage | null = null;
  const connection = new Connection();
  const obstacleTool = new ObstacleTool();
  let editor: RndfEditor | null = null;
  fetch("/rndf").then((r) => r.text()).then((text) => {
    editor = RndfEditor.import(text);
  }).catch(() => undefined);
  let dragWaypoint: string | null = null;

  const paintGrid = (pixels: Uint8ClampedArray, w: number, h: number,
                     dx: number, dy: number, dw: number, dh: number) => {
    off.width = w;
    off.height = h;
    offCtx.putImageData(new ImageData(new Uint8ClampedArray(pixels), w, h), 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(off, dx, dy, dw, dh);
  };

  const redraw = () => {
    if (!lastState) return;
    if (view.followEgo) {
      view = { ...view, centerX: lastState.ego.x, centerY: lastState.ego.y };
    }
    renderState(lastState, view, { width: canvas.width, height: canvas.height },
      ctx as never, paintGrid);
    statusEl.textContent =
      `${view.connected ? "connected" : "disconnected"} | tool: ${view.tool}`
      + (lastState.paused ? " | PAUSED" : "")
      + (lastState.estop ? " | ESTOP" : "");
  };

  connection.onState = (msg) => {
    lastState = msg;
    redraw();
  };
  connection.onAck = (ack) => {
    const div = root.createElement("div");
    div.textContent = `ack #${ack.id ?? "-"}: ${ack.ok ? "ok" : `ERROR ${ack.error}`}`;
    logEl.prepend(div);
  };

  const url = `ws://${location.host}/stream`;
  const socket = new WebSocket(url);
  socket.onopen = () => {
    view = { ...view, connected: true };
    connection.attach({
      get readyState() { return socket.readyState; },
      send: (data) => socket.send(data),
    });
    redraw();
  };
  socket.onmessage = (ev) => connection.receive(String(ev.data));
  socket.onclose = () => {
    view = { ...view, connected: false };
    connection.detach();
    redraw();
  };

  root.addEventListener("keydown", (ev) => {
    const cmd = keyToCommand((ev as KeyboardEvent).key);
    if (cmd.kind === "toolbar") {
      if (cmd.name === "PAUSE") connection.pause();
      else if (cmd.name === "RUN") connection.run();
      else connection.estop();
    } else if (cmd.kind === "steer" && view.tool === "drive") {
      connection.steer(cmd.action);
    }
  });

  for (const name of ["PAUSE", "RUN", "ESTOP"] as const) {
    root.getElementById(`btn-${name.toLowerCase()}`)?.addEventListener("click", () => {
      if (name === "PAUSE") connection.pause();
      else if (name === "RUN") connection.run();
      else connection.estop();
    });
  }
  for (const tool of ["inspect", "place_obstacle", "edit_rndf", "drive"] as const) {
    root.getElementById(`tool-${tool}`)?.addEventListener("click", () => {
      view = { ...view, tool };
      redraw();
    });
  }
  for (const layer of ["tracks", "grid", "corridor", "votes", "lane", "validators"]) {
    root.getElementById(`layer-${layer}`)?.addEventListener("change", () => {
      view = toggleLayer(view, layer as keyof Layers);
      redraw();
    });
  }

  const size = () => ({ width: canvas.width, height: canvas.height });
  canvas.addEventListener("wheel", (ev) => {
    view = zoomAt(view, (ev as WheelEvent).deltaY < 0 ? 1.2 : 1 / 1.2);
    redraw();
    ev.preventDefault();
  });
  let dragging: [number, number] | null = null;
  canvas.addEventListener("mousedown", (ev) => {
    const me = ev as MouseEvent;
    const [wx, wy] = canvasToWorld(view, size(), me.offsetX, me.offsetY);
    if (view.tool === "place_obstacle") {
      const result = obstacleTool.click(wx, wy);
      if (result.done && result.polygon) {
        connection.placeObstacle(result.polygon);
      }
      return;
    }
    if (view.tool === "edit_rndf" && editor) {
      for (const lane of editor.lanes.values()) {
        for (const wp of lane.waypoints) {
          if (Math.hypot(wp.x - wx, wp.y - wy) < 2.0 / view.zoom + 0.8) {
            dragWaypoint = wp.id;
            return;
          }
        }
      }
    }
    dragging = [me.offsetX, me.offsetY];
  });
  canvas.addEventListener("mousemove", (ev) => {
    const me = ev as MouseEvent;
    if (dragging) {
      view = pan(view, me.offsetX - dragging[0], me.offsetY - dragging[1]);
      dragging = [me.offsetX, me.offsetY];
      redraw();
    }
  });
  canvas.addEventListener("mouseup", (ev) => {
    const me = ev as MouseEvent;
    if (dragWaypoint && editor) {
      const [wx, wy] = canvasToWorld(view, size(), me.offsetX, me.offsetY);
      editor.moveWaypoint(dragWaypoint, wx, wy);
      connection.sendRndfPatch(editor.takePatch());
      dragWaypoint = null;
    }
    dragging = null;
  });
}

if (typeof window !== "undefined" && typeof document !== "undefined"
    && document.getElementById("scene")) {
  startCockpit();
}
