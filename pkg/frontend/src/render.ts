/**
 * Scene rendering: a pure function of (state message, view state).
 *
 * The renderer draws through a narrow context interface so tests can
 * substitute a recording stub; the browser passes a real 2D context plus
 * a pixel-blitting helper for the drivability region.
 */

import {
  StateMessage,
  base64ToBytes,
  decodeP6,
} from "./protocol.js";
import { CanvasSize, ViewState, worldToCanvas } from "./viewState.js";

export interface Canvas2DLike {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  globalAlpha: number;
  font: string;
}

export interface GridPainter {
  /** Blit RGBA cell pixels (row 0 = max world y) into a canvas rectangle. */
  (pixels: Uint8ClampedArray, w: number, h: number,
   dx: number, dy: number, dw: number, dh: number): void;
}

/**
 * State-message fields deliberately not drawn by this renderer version.
 * The protocol conformance suite checks every field is either rendered
 * or listed here.
 */
export const IGNORED_STATE_FIELDS: ReadonlySet<string> = new Set([
  "proto", // handled by the protocol layer
  "type",  // handled by the protocol layer
]);

const COLORS = {
  ego: "#ffd24a",
  track: "#6fd3ff",
  trackArrow: "#ffffff",
  corridor: "#69f07a",
  corridorStopped: "#f06969",
  lane: "#c9a6ff",
  voteBar: "#69f07a",
  voteVeto: "#f04a4a",
  text: "#e8e8e8",
  banner: "#20242c",
};

export function renderState(
  msg: StateMessage,
  view: ViewState,
  size: CanvasSize,
  ctx: Canvas2DLike,
  paintGrid: GridPainter,
): void {
  ctx.clearRect(0, 0, size.width, size.height);
  const w2c = (x: number, y: number) => worldToCanvas(view, size, x, y);

  if (view.layers.grid && msg.grid_region) {
    const img = decodeP6(base64ToBytes(msg.grid_region.data));
    const cell = msg.grid_region.cell_size;
    const [ox, oy] = msg.grid_region.origin;
    // region origin is the min corner; row 0 holds the max-y cells
    const [left, bottom] = w2c(ox, oy);
    const [right, top] = w2c(ox + img.width * cell, oy + img.height * cell);
    ctx.globalAlpha = 0.45;
    paintGrid(img.pixels, img.width, img.height,
      Math.min(left, right), Math.min(top, bottom),
      Math.abs(right - left), Math.abs(top - bottom));
    ctx.globalAlpha = 1.0;
  }

  if (view.layers.lane && msg.lane_model?.centerline?.length) {
    ctx.strokeStyle = COLORS.lane;
    ctx.lineWidth = 1.5;
    polyline(ctx, msg.lane_model.centerline.map(([x, y]) => w2c(x, y)));
  }

  if (view.layers.corridor && msg.corridor) {
    ctx.strokeStyle = msg.corridor.stop_flag ? COLORS.corridorStopped : COLORS.corridor;
    ctx.lineWidth = 2;
    const pts = msg.corridor.points.map((p) => w2c(p.x, p.y));
    polyline(ctx, pts);
    // pearls
    ctx.fillStyle = ctx.strokeStyle;
    for (const [px, py] of pts) {
      ctx.beginPath();
      ctx.arc(px, py, 2.0, 0, 2 * Math.PI);
      ctx.fill();
    }
    if (msg.corridor.interrupt) {
      ctx.fillStyle = COLORS.text;
      ctx.font = "12px monospace";
      ctx.fillText(`interrupt: ${msg.corridor.interrupt} (seq ${msg.corridor.seq})`, 10, 36);
    }
  }

  if (view.layers.tracks && msg.tracks) {
    for (const track of msg.tracks) {
      ctx.strokeStyle = COLORS.track;
      ctx.lineWidth = 2;
      const pts = track.contour.map(([x, y]) => w2c(x, y));
      polyline(ctx, pts);
      for (const [px, py] of pts) {
        ctx.beginPath();
        ctx.arc(px, py, 1.5, 0, 2 * Math.PI);
        ctx.stroke();
      }
      // velocity arrow from the contour mean along the course
      const cx = mean(track.contour.map((p) => p[0]));
      const cy = mean(track.contour.map((p) => p[1]));
      const alpha = track.alpha ?? 0;
      const speed = track.v;
      if (Math.abs(speed) > 0.05) {
        const tip = w2c(cx + Math.cos(alpha) * speed, cy + Math.sin(alpha) * speed);
        const base = w2c(cx, cy);
        ctx.strokeStyle = COLORS.trackArrow;
        ctx.lineWidth = 1;
        polyline(ctx, [base, tip]);
      }
      ctx.fillStyle = COLORS.text;
      ctx.font = "10px monospace";
      const label = w2c(cx, cy);
      ctx.fillText(`#${track.id} ${track.model} ${track.v.toFixed(1)} m/s`,
        label[0] + 4, label[1] - 4);
      void track.a;
      void track.omega;
      void track.t;
    }
  }

  // ego triangle
  {
    const { x, y, heading, v } = msg.ego;
    const nose = w2c(x + 2.2 * Math.cos(heading), y + 2.2 * Math.sin(heading));
    const tailL = w2c(
      x + 1.1 * Math.cos(heading + 2.5), y + 1.1 * Math.sin(heading + 2.5));
    const tailR = w2c(
      x + 1.1 * Math.cos(heading - 2.5), y + 1.1 * Math.sin(heading - 2.5));
    ctx.fillStyle = COLORS.ego;
    ctx.beginPath();
    ctx.moveTo(nose[0], nose[1]);
    ctx.lineTo(tailL[0], tailL[1]);
    ctx.lineTo(tailR[0], tailR[1]);
    ctx.closePath();
    ctx.fill();
    ctx.fillStyle = COLORS.text;
    ctx.font = "12px monospace";
    ctx.fillText(
      `t=${msg.t.toFixed(2)}s v=${v.toFixed(1)} m/s a=${(msg.ego.a ?? 0).toFixed(1)}`
      + ` yaw=${(msg.ego.yaw_rate ?? 0).toFixed(2)}`,
      10, 20);
  }

  if (view.layers.votes && msg.votes) {
    drawVoteFan(ctx, size, msg.votes.curvatures, msg.votes.combined, msg.votes.behaviors);
  }

  if (view.layers.validators && msg.validators) {
    let yPos = 56;
    ctx.font = "11px monospace";
    for (const v of msg.validators) {
      ctx.fillStyle = v.passed ? COLORS.corridor : COLORS.corridorStopped;
      ctx.fillText(
        `${v.passed ? "ok " : "FAIL"} ${v.name} (${v.measurement.toFixed(2)})`,
        10, yPos);
      yPos += 14;
    }
  }

  // status banner
  const flags: string[] = [];
  if (msg.paused) flags.push("PAUSED");
  if (msg.estop) flags.push("ESTOP");
  if (msg.completed) flags.push("MISSION COMPLETE");
  if (msg.interrupts) flags.push(`${msg.interrupts.kind}:${msg.interrupts.phase}`);
  if (flags.length) {
    ctx.fillStyle = COLORS.banner;
    ctx.fillRect(size.width / 2 - 120, 4, 240, 22);
    ctx.fillStyle = COLORS.text;
    ctx.font = "13px monospace";
    ctx.fillText(flags.join(" | "), size.width / 2 - 112, 20);
  }
}

function polyline(ctx: Canvas2DLike, pts: [number, number][]): void {
  if (pts.length === 0) return;
  ctx.beginPath();
  ctx.moveTo(pts[0][0], pts[0][1]);
  for (const [x, y] of pts.slice(1)) ctx.lineTo(x, y);
  ctx.stroke();
}

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / Math.max(1, values.length);
}

function drawVoteFan(
  ctx: Canvas2DLike,
  size: CanvasSize,
  curvatures: number[],
  combined: number[],
  behaviors?: Record<string, number[]>,
): void {
  const n = curvatures.length;
  if (n === 0 || combined.length !== n) return;
  const barW = 6;
  const baseY = size.height - 16;
  const x0 = size.width - n * barW - 20;
  const maxAbs = Math.max(1, ...combined.map((v) => Math.abs(v)));
  ctx.font = "10px monospace";
  for (let i = 0; i < n; i += 1) {
    const value = combined[i];
    const vetoed = Object.values(behaviors ?? {}).some((vals) => vals[i] <= -1);
    const h = (Math.abs(value) / maxAbs) * 60;
    ctx.fillStyle = vetoed ? COLORS.voteVeto : COLORS.voteBar;
    if (vetoed) {
      ctx.fillRect(x0 + i * barW, baseY - 60, barW - 1, 60);
    } else {
      ctx.fillRect(x0 + i * barW, value >= 0 ? baseY - h : baseY, barW - 1, h);
    }
  }
  ctx.fillStyle = COLORS.text;
  ctx.fillText("left", x0, baseY + 12);
  ctx.fillText("right", x0 + (n - 2) * barW - 10, baseY + 12);
}
