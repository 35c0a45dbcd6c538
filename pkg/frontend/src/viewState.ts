/** Camera over the world frame plus display toggles and the active tool. */

export type Tool = "inspect" | "place_obstacle" | "edit_rndf" | "drive";

export interface Layers {
  tracks: boolean;
  grid: boolean;
  corridor: boolean;
  votes: boolean;
  lane: boolean;
  validators: boolean;
}

export interface ViewState {
  /** World coordinates at the canvas center. */
  centerX: number;
  centerY: number;
  /** Pixels per meter. */
  zoom: number;
  /** Extra rotation so north can point up; 0 keeps world y up. */
  northUp: number;
  layers: Layers;
  tool: Tool;
  connected: boolean;
  followEgo: boolean;
}

export function defaultViewState(): ViewState {
  return {
    centerX: 0,
    centerY: 0,
    zoom: 6,
    northUp: 0,
    layers: { tracks: true, grid: true, corridor: true, votes: true, lane: true, validators: true },
    tool: "inspect",
    connected: false,
    followEgo: true,
  };
}

export interface CanvasSize {
  width: number;
  height: number;
}

/** World -> canvas pixel transform (y up in the world, y down on canvas). */
export function worldToCanvas(
  view: ViewState,
  size: CanvasSize,
  x: number,
  y: number,
): [number, number] {
  const c = Math.cos(view.northUp);
  const s = Math.sin(view.northUp);
  const dx = x - view.centerX;
  const dy = y - view.centerY;
  const rx = c * dx - s * dy;
  const ry = s * dx + c * dy;
  return [size.width / 2 + rx * view.zoom, size.height / 2 - ry * view.zoom];
}

export function canvasToWorld(
  view: ViewState,
  size: CanvasSize,
  px: number,
  py: number,
): [number, number] {
  const rx = (px - size.width / 2) / view.zoom;
  const ry = (size.height / 2 - py) / view.zoom;
  const c = Math.cos(-view.northUp);
  const s = Math.sin(-view.northUp);
  return [view.centerX + c * rx - s * ry, view.centerY + s * rx + c * ry];
}

export function pan(view: ViewState, dxPixels: number, dyPixels: number): ViewState {
  return {
    ...view,
    followEgo: false,
    centerX: view.centerX - dxPixels / view.zoom,
    centerY: view.centerY + dyPixels / view.zoom,
  };
}

export function zoomAt(view: ViewState, factor: number): ViewState {
  const zoom = Math.min(60, Math.max(0.5, view.zoom * factor));
  return { ...view, zoom };
}

export function toggleLayer(view: ViewState, layer: keyof Layers): ViewState {
  return { ...view, layers: { ...view.layers, [layer]: !view.layers[layer] } };
}
