import { describe, expect, it } from "vitest";

import { renderState } from "../src/render.js";
import { defaultViewState, toggleLayer, worldToCanvas, canvasToWorld } from "../src/viewState.js";
import { FakeContext, fakeGridPainter, fullStateMessage, GridBlit } from "./helpers.js";

const SIZE = { width: 800, height: 600 };

describe("renderer", () => {
  it("is deterministic for identical inputs", () => {
    const view = defaultViewState();
    const a = new FakeContext();
    const b = new FakeContext();
    renderState(fullStateMessage(), view, SIZE, a, fakeGridPainter([]));
    renderState(fullStateMessage(), view, SIZE, b, fakeGridPainter([]));
    expect(a.calls).toEqual(b.calls);
  });

  it("draws one contour polyline per track", () => {
    const msg = fullStateMessage();
    msg.votes = null;
    msg.lane_model = null;
    msg.corridor = null;
    msg.grid_region = null;
    const singleTrack = { ...msg, tracks: [msg.tracks![0]] };
    const ctx = new FakeContext();
    renderState(singleTrack, defaultViewState(), SIZE, ctx, fakeGridPainter([]));
    // one contour polyline (3 points -> moveTo + 2 lineTo before a stroke)
    const moveTos = ctx.calls.filter((c) => c.startsWith("moveTo")).length;
    const labels = ctx.calls.filter((c) => c.startsWith("fillText(#")).length;
    expect(labels).toBe(1);
    expect(moveTos).toBeGreaterThanOrEqual(1);
  });

  it("empty world renders a grid-only scene", () => {
    const msg = fullStateMessage();
    msg.tracks = [];
    msg.corridor = null;
    msg.votes = null;
    msg.lane_model = null;
    msg.validators = [];
    msg.interrupts = null;
    const blits: GridBlit[] = [];
    const ctx = new FakeContext();
    renderState(msg, defaultViewState(), SIZE, ctx, fakeGridPainter(blits));
    expect(blits.length).toBe(1);
    expect(blits[0].w).toBe(2);
    const polylines = ctx.calls.filter((c) => c.startsWith("lineTo")).length;
    expect(polylines).toBe(2); // only the ego triangle contributes lines
  });

  it("layer toggles suppress drawing", () => {
    const msg = fullStateMessage();
    let view = defaultViewState();
    view = toggleLayer(view, "grid");
    view = toggleLayer(view, "votes");
    const blits: GridBlit[] = [];
    const ctx = new FakeContext();
    renderState(msg, view, SIZE, ctx, fakeGridPainter(blits));
    expect(blits.length).toBe(0);
  });

  it("marks vetoed curvature bars in the fan", () => {
    const msg = fullStateMessage();
    const ctx = new FakeContext();
    renderState(msg, defaultViewState(), SIZE, ctx, fakeGridPainter([]));
    const vetoBars = ctx.calls.filter((c) => c.includes("#f04a4a") && c.startsWith("fillRect"));
    expect(vetoBars.length).toBe(9); // behaviors veto indices 31..39
  });

  it("renders status flags in the banner", () => {
    const msg = fullStateMessage();
    msg.paused = true;
    msg.estop = true;
    const ctx = new FakeContext();
    renderState(msg, defaultViewState(), SIZE, ctx, fakeGridPainter([]));
    const banner = ctx.calls.find((c) => c.includes("PAUSED"));
    expect(banner).toBeTruthy();
    expect(banner).toContain("ESTOP");
  });
});

describe("view transforms", () => {
  it("world/canvas round trip", () => {
    const view = { ...defaultViewState(), centerX: 12, centerY: -5, zoom: 9, northUp: 0.4 };
    const [px, py] = worldToCanvas(view, SIZE, 20, 3);
    const [wx, wy] = canvasToWorld(view, SIZE, px, py);
    expect(wx).toBeCloseTo(20, 9);
    expect(wy).toBeCloseTo(3, 9);
  });

  it("y axis points up on screen", () => {
    const view = defaultViewState();
    const [, pyLow] = worldToCanvas(view, SIZE, 0, 0);
    const [, pyHigh] = worldToCanvas(view, SIZE, 0, 10);
    expect(pyHigh).toBeLessThan(pyLow);
  });
});
