/**
 * Wire protocol (proto 1): newline-delimited JSON over the stream socket.
 * Server sends `state` records, the cockpit sends `command` records and
 * receives an `ack` for each.
 */

export const PROTO_VERSION = 1;

export interface EgoStateMsg {
  x: number;
  y: number;
  heading: number;
  v: number;
  a?: number;
  yaw_rate?: number;
}

export interface TrackMsg {
  id: number;
  model: string;
  contour: number[][];
  v: number;
  a: number;
  alpha?: number;
  omega?: number;
  t: number;
}

export interface CorridorPointMsg {
  x: number;
  y: number;
  heading: number;
  kappa: number;
  v: number;
}

export interface CorridorMsg {
  seq: number;
  points: CorridorPointMsg[];
  stop_flag: boolean;
  interrupt?: string | null;
}

export interface VotesMsg {
  curvatures: number[];
  combined: number[];
  behaviors?: Record<string, number[]>;
}

export interface GridRegionMsg {
  encoding: "p6";
  cell_size: number;
  origin: number[];
  data: string; // base64 binary pixmap
}

export interface ValidatorMsg {
  name: string;
  passed: boolean;
  measurement: number;
}

export interface InterruptMsg {
  kind: string;
  phase: string;
}

export interface StateMessage {
  proto: number;
  type: "state";
  t: number;
  ego: EgoStateMsg;
  tracks?: TrackMsg[];
  corridor?: CorridorMsg | null;
  votes?: VotesMsg | null;
  grid_region?: GridRegionMsg | null;
  lane_model?: { centerline?: number[][] } | null;
  validators?: ValidatorMsg[];
  interrupts?: InterruptMsg | null;
  paused?: boolean;
  estop?: boolean;
  completed?: boolean;
}

export interface CommandMessage {
  proto: number;
  type: "command";
  id?: number;
  name: string;
  polygon?: number[][];
  obstacle_id?: number;
  action?: string;
  ops?: Record<string, unknown>[];
}

export interface AckMessage {
  proto: number;
  type: "ack";
  id?: number | null;
  ok: boolean;
  error?: string | null;
  result?: Record<string, unknown> | null;
}

export type ServerMessage = StateMessage | AckMessage;

export class ProtocolError extends Error {}

export function parseServerLine(line: string): ServerMessage {
  let record: unknown;
  try {
    record = JSON.parse(line);
  } catch (e) {
    throw new ProtocolError(`not valid JSON: ${(e as Error).message}`);
  }
  if (typeof record !== "object" || record === null) {
    throw new ProtocolError("message must be an object");
  }
  const rec = record as Record<string, unknown>;
  if (rec.proto !== PROTO_VERSION) {
    throw new ProtocolError(`unsupported proto ${String(rec.proto)}`);
  }
  if (rec.type === "state") {
    if (typeof rec.t !== "number" || typeof rec.ego !== "object" || rec.ego === null) {
      throw new ProtocolError("state message needs numeric t and an ego object");
    }
    return rec as unknown as StateMessage;
  }
  if (rec.type === "ack") {
    if (typeof rec.ok !== "boolean") {
      throw new ProtocolError("ack message needs a boolean ok");
    }
    return rec as unknown as AckMessage;
  }
  throw new ProtocolError(`unknown message type ${String(rec.type)}`);
}

export function encodeCommand(cmd: Omit<CommandMessage, "proto" | "type">): string {
  const record: CommandMessage = { proto: PROTO_VERSION, type: "command", ...cmd };
  return JSON.stringify(record) + "\n";
}

export interface PixmapImage {
  width: number;
  height: number;
  /** RGBA bytes, row 0 first. */
  pixels: Uint8ClampedArray;
}

/** Decode a binary P6 pixmap (as a byte array) into RGBA pixels. */
export function decodeP6(bytes: Uint8Array): PixmapImage {
  if (bytes[0] !== 0x50 || bytes[1] !== 0x36) {
    throw new ProtocolError("not a P6 pixmap");
  }
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < bytes.length && isSpace(bytes[pos])) pos += 1;
    if (bytes[pos] === 0x23) {
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos += 1;
      continue;
    }
    let value = 0;
    let digits = 0;
    while (pos < bytes.length && bytes[pos] >= 0x30 && bytes[pos] <= 0x39) {
      value = value * 10 + (bytes[pos] - 0x30);
      pos += 1;
      digits += 1;
    }
    if (digits === 0) throw new ProtocolError("malformed pixmap header");
    fields.push(value);
  }
  pos += 1; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new ProtocolError("only 8-bit pixmaps supported");
  const pixels = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i += 1) {
    pixels[i * 4] = bytes[pos + i * 3];
    pixels[i * 4 + 1] = bytes[pos + i * 3 + 1];
    pixels[i * 4 + 2] = bytes[pos + i * 3 + 2];
    pixels[i * 4 + 3] = 255;
  }
  return { width, height, pixels };
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
}

export function base64ToBytes(data: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(data);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i += 1) out[i] = bin.charCodeAt(i);
    return out;
  }
  return new Uint8Array(Buffer.from(data, "base64"));
}
