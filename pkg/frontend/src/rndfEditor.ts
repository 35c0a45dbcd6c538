/**
 * Waypoint-graph editor model: drag waypoints, add stop signs, connect
 * exits.  Edits accumulate into a validated patch for the server; the
 * graph also round-trips through the plain-text road-network format.
 */

export interface EditorWaypoint {
  id: string; // "segment.lane.index"
  x: number;
  y: number;
  isStop: boolean;
  checkpoint?: number;
}

export interface EditorLane {
  segment: number;
  lane: number;
  width: number;
  waypoints: EditorWaypoint[];
}

export interface EditorZone {
  id: number;
  perimeter: [number, number][];
  spots: { id: string; x: number; y: number; heading: number }[];
}

export type PatchOp =
  | { op: "move_waypoint"; id: string; x: number; y: number }
  | { op: "add_stop"; id: string }
  | { op: "add_exit"; from: string; to: string };

export class EditorError extends Error {}

export class RndfEditor {
  lanes = new Map<string, EditorLane>();
  exits: [string, string][] = [];
  zones: EditorZone[] = [];
  private patch: PatchOp[] = [];

  laneKey(segment: number, lane: number): string {
    return `${segment}.${lane}`;
  }

  addLane(segment: number, lane: number, width: number): EditorLane {
    const key = this.laneKey(segment, lane);
    if (this.lanes.has(key)) throw new EditorError(`duplicate lane ${key}`);
    if (width <= 0) throw new EditorError("lane width must be positive");
    const entry: EditorLane = { segment, lane, width, waypoints: [] };
    this.lanes.set(key, entry);
    return entry;
  }

  addWaypoint(segment: number, lane: number, x: number, y: number): EditorWaypoint {
    const key = this.laneKey(segment, lane);
    const entry = this.lanes.get(key);
    if (!entry) throw new EditorError(`no lane ${key}`);
    const wp: EditorWaypoint = {
      id: `${segment}.${lane}.${entry.waypoints.length + 1}`,
      x, y, isStop: false,
    };
    entry.waypoints.push(wp);
    return wp;
  }

  waypoint(id: string): EditorWaypoint {
    const parts = id.split(".");
    if (parts.length !== 3) throw new EditorError(`bad waypoint id ${id}`);
    const entry = this.lanes.get(`${parts[0]}.${parts[1]}`);
    const wp = entry?.waypoints.find((w) => w.id === id);
    if (!wp) throw new EditorError(`no waypoint ${id}`);
    return wp;
  }

  hasWaypoint(id: string): boolean {
    try {
      this.waypoint(id);
      return true;
    } catch {
      return false;
    }
  }

  /** Drag a waypoint to a new position (one patch record per drag). */
  moveWaypoint(id: string, x: number, y: number): PatchOp {
    const wp = this.waypoint(id);
    if (!Number.isFinite(x) || !Number.isFinite(y)) {
      throw new EditorError("non-finite coordinates");
    }
    wp.x = x;
    wp.y = y;
    const op: PatchOp = { op: "move_waypoint", id, x, y };
    this.patch.push(op);
    return op;
  }

  addStop(id: string): PatchOp {
    const wp = this.waypoint(id);
    wp.isStop = true;
    const op: PatchOp = { op: "add_stop", id };
    this.patch.push(op);
    return op;
  }

  connectExit(from: string, to: string): PatchOp {
    if (!this.hasWaypoint(from)) throw new EditorError(`no waypoint ${from}`);
    if (!this.hasWaypoint(to)) throw new EditorError(`no waypoint ${to}`);
    if (from === to) throw new EditorError("exit cannot loop to itself");
    this.exits.push([from, to]);
    const op: PatchOp = { op: "add_exit", from, to };
    this.patch.push(op);
    return op;
  }

  takePatch(): PatchOp[] {
    const out = this.patch;
    this.patch = [];
    return out;
  }

  /** Serialize to the line-oriented road network text format. */
  export(): string {
    const lines: string[] = [];
    const segments = new Map<number, EditorLane[]>();
    for (const lane of this.lanes.values()) {
      const list = segments.get(lane.segment) ?? [];
      list.push(lane);
      segments.set(lane.segment, list);
    }
    for (const segment of [...segments.keys()].sort((a, b) => a - b)) {
      lines.push(`segment ${segment}`);
      for (const lane of segments.get(segment)!.sort((a, b) => a.lane - b.lane)) {
        if (lane.waypoints.length < 2) {
          throw new EditorError(`lane ${lane.segment}.${lane.lane} needs >= 2 waypoints`);
        }
        lines.push(`lane ${lane.segment}.${lane.lane} ${lane.width}`);
        for (const wp of lane.waypoints) {
          lines.push(`waypoint ${wp.id} ${wp.x} ${wp.y}`);
        }
        for (const wp of lane.waypoints) {
          if (wp.isStop) lines.push(`stop ${wp.id}`);
          if (wp.checkpoint != null) lines.push(`checkpoint ${wp.id} ${wp.checkpoint}`);
        }
      }
    }
    for (const [from, to] of this.exits) {
      if (!this.hasWaypoint(from) || !this.hasWaypoint(to)) {
        throw new EditorError(`exit ${from} -> ${to} references a missing waypoint`);
      }
      lines.push(`exit ${from} ${to}`);
    }
    for (const zone of this.zones) {
      lines.push(`zone ${zone.id}`);
      for (const [x, y] of zone.perimeter) lines.push(`perimeter ${x} ${y}`);
      for (const spot of zone.spots) {
        lines.push(`spot ${spot.id} ${spot.x} ${spot.y} ${spot.heading}`);
      }
    }
    return lines.join("\n") + "\n";
  }

  /** Parse the text format back into an editor graph. */
  static import(text: string): RndfEditor {
    const editor = new RndfEditor();
    let currentLane: EditorLane | null = null;
    let currentZone: EditorZone | null = null;
    const deferred: [string, string[]][] = [];
    for (const [lineNo, raw] of text.split("\n").entries()) {
      const line = raw.split("#")[0].trim();
      if (!line) continue;
      const [keyword, ...args] = line.split(/\s+/);
      const fail = (msg: string) => {
        throw new EditorError(`line ${lineNo + 1}: ${msg}`);
      };
      if (keyword === "segment") {
        currentLane = null;
        currentZone = null;
      } else if (keyword === "lane") {
        const [sl, width] = args;
        const [seg, lane] = sl.split(".").map(Number);
        currentLane = editor.addLane(seg, lane, Number(width));
      } else if (keyword === "waypoint") {
        if (!currentLane) fail("waypoint outside lane");
        const wp = editor.addWaypoint(currentLane!.segment, currentLane!.lane,
          Number(args[1]), Number(args[2]));
        if (wp.id !== args[0]) fail(`unexpected waypoint id ${args[0]}`);
      } else if (keyword === "stop" || keyword === "checkpoint" || keyword === "exit") {
        deferred.push([keyword, args]);
      } else if (keyword === "zone") {
        currentZone = { id: Number(args[0]), perimeter: [], spots: [] };
        editor.zones.push(currentZone);
        currentLane = null;
      } else if (keyword === "perimeter") {
        if (!currentZone) fail("perimeter outside zone");
        currentZone!.perimeter.push([Number(args[0]), Number(args[1])]);
      } else if (keyword === "spot") {
        if (!currentZone) fail("spot outside zone");
        currentZone!.spots.push({ id: args[0], x: Number(args[1]),
          y: Number(args[2]), heading: Number(args[3]) });
      } else {
        fail(`unknown keyword ${keyword}`);
      }
    }
    for (const [keyword, args] of deferred) {
      if (keyword === "stop") {
        editor.waypoint(args[0]).isStop = true;
      } else if (keyword === "checkpoint") {
        editor.waypoint(args[0]).checkpoint = Number(args[1]);
      } else {
        editor.connectExit(args[0], args[1]);
      }
    }
    editor.patch = [];
    return editor;
  }
}
