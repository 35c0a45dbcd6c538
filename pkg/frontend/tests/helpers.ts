import { StateMessage } from "../src/protocol.js";
import { Canvas2DLike } from "../src/render.js";

/** Recording 2D-context stub: every call and style write is logged. */
export class FakeContext implements Canvas2DLike {
  calls: string[] = [];
  strokeStyle = "";
  fillStyle = "";
  lineWidth = 1;
  globalAlpha = 1;
  font = "";

  private record(name: string, ...args: unknown[]): void {
    const fmt = args
      .map((a) => (typeof a === "number" ? a.toFixed(2) : String(a)))
      .join(",");
    this.calls.push(`${name}(${fmt})`);
  }

  clearRect(x: number, y: number, w: number, h: number): void { this.record("clearRect", x, y, w, h); }
  beginPath(): void { this.record("beginPath"); }
  moveTo(x: number, y: number): void { this.record("moveTo", x, y); }
  lineTo(x: number, y: number): void { this.record("lineTo", x, y); }
  closePath(): void { this.record("closePath"); }
  stroke(): void { this.record("stroke", this.strokeStyle, this.lineWidth); }
  fill(): void { this.record("fill", this.fillStyle); }
  arc(x: number, y: number, r: number, a0: number, a1: number): void { this.record("arc", x, y, r, a0, a1); }
  fillRect(x: number, y: number, w: number, h: number): void { this.record("fillRect", x, y, w, h, this.fillStyle); }
  strokeRect(x: number, y: number, w: number, h: number): void { this.record("strokeRect", x, y, w, h); }
  fillText(text: string, x: number, y: number): void { this.record("fillText", text, x, y); }
}

export interface GridBlit {
  w: number;
  h: number;
  dx: number;
  dy: number;
  dw: number;
  dh: number;
}

export function fakeGridPainter(blits: GridBlit[]) {
  return (_pixels: Uint8ClampedArray, w: number, h: number,
          dx: number, dy: number, dw: number, dh: number) => {
    blits.push({ w, h, dx, dy, dw, dh });
  };
}

/** Tiny 2x2 drivability pixmap: green, red / blue, blue. */
export function sampleGridRegion() {
  const header = "P6\n2 2\n255\n";
  const body = [0, 255, 0, 255, 0, 0, 0, 0, 255, 0, 0, 255];
  const bytes = new Uint8Array(header.length + body.length);
  for (let i = 0; i < header.length; i += 1) bytes[i] = header.charCodeAt(i);
  bytes.set(body, header.length);
  return {
    encoding: "p6" as const,
    cell_size: 0.25,
    origin: [0, 0],
    data: Buffer.from(bytes).toString("base64"),
  };
}

/** A state message with every protocol field populated. */
export function fullStateMessage(): StateMessage {
  return {
    proto: 1,
    type: "state",
    t: 12.34,
    ego: { x: 5, y: 1, heading: 0.1, v: 8.2, a: 0.5, yaw_rate: 0.02 },
    tracks: [
      { id: 3, model: "6D", contour: [[10, 0], [12, 0], [12, 2]], v: 4.0, a: 0.1,
        alpha: 0.0, omega: 0.01, t: 12.3 },
      { id: 9, model: "4D", contour: [[20, -3]], v: 0.0, a: 0.0, t: 12.2 },
    ],
    corridor: {
      seq: 17,
      points: [
        { x: 6, y: 1, heading: 0.1, kappa: 0.0, v: 8.0 },
        { x: 7, y: 1.1, heading: 0.1, kappa: 0.0085, v: 8.0 },
        { x: 8, y: 1.2, heading: 0.11, kappa: 0.0, v: 7.5 },
      ],
      stop_flag: false,
      interrupt: "intersection",
    },
    votes: {
      curvatures: Array.from({ length: 40 }, (_, i) => -0.17 + i * 0.0085),
      combined: Array.from({ length: 40 }, (_, i) => Math.sin(i / 6)),
      behaviors: { avoid_obstacles: Array.from({ length: 40 }, (_, i) => (i > 30 ? -1 : 0.5)) },
    },
    grid_region: sampleGridRegion(),
    lane_model: { centerline: [[0, 0], [10, 0], [20, 0.5]] },
    validators: [
      { name: "collision", passed: true, measurement: 1 },
      { name: "min_clearance", passed: false, measurement: 0.3 },
    ],
    interrupts: { kind: "intersection", phase: "slowing" },
    paused: false,
    estop: false,
    completed: false,
  };
}

/** Deep proxy that records which top-level state fields get read. */
export function trackFieldAccess<T extends object>(obj: T): { proxied: T; accessed: Set<string> } {
  const accessed = new Set<string>();
  const proxied = new Proxy(obj, {
    get(target, prop, receiver) {
      if (typeof prop === "string") accessed.add(prop);
      return Reflect.get(target, prop, receiver);
    },
  });
  return { proxied, accessed };
}
