/**
 * Stream connection: sends commands, matches acks, rate-limits steering.
 *
 * Commands issued while disconnected are queued for a bounded time and
 * dropped with a notice afterwards.  The socket type is structural so
 * tests can drive a fake.
 */

import {
  AckMessage,
  CommandMessage,
  ServerMessage,
  StateMessage,
  encodeCommand,
  parseServerLine,
} from "./protocol.js";

export interface SocketLike {
  readonly readyState: number;
  send(data: string): void;
}

export const OPEN = 1;

export interface CommandLogEntry {
  command: CommandMessage;
  ack?: AckMessage;
  sentAt: number;
  note?: string;
}

export interface ConnectionOptions {
  /** Minimum interval between steer commands, ms (20 Hz default). */
  steerIntervalMs?: number;
  /** How long queued commands survive a disconnect, ms. */
  queueTtlMs?: number;
  now?: () => number;
}

export class Connection {
  private socket: SocketLike | null = null;
  private nextId = 1;
  private pending = new Map<number, CommandLogEntry>();
  private queue: { line: string; entry: CommandLogEntry; queuedAt: number }[] = [];
  private lastSteerAt = -Infinity;
  readonly log: CommandLogEntry[] = [];
  readonly notices: string[] = [];
  onState: (msg: StateMessage) => void = () => undefined;
  onAck: (msg: AckMessage) => void = () => undefined;
  private readonly steerIntervalMs: number;
  private readonly queueTtlMs: number;
  private readonly now: () => number;
  private buffer = "";

  constructor(opts: ConnectionOptions = {}) {
    this.steerIntervalMs = opts.steerIntervalMs ?? 50;
    this.queueTtlMs = opts.queueTtlMs ?? 2000;
    this.now = opts.now ?? (() => Date.now());
  }

  attach(socket: SocketLike): void {
    this.socket = socket;
    this.flushQueue();
  }

  detach(): void {
    this.socket = null;
  }

  get connected(): boolean {
    return this.socket !== null && this.socket.readyState === OPEN;
  }

  /** Feed raw text from the socket; handles partial lines. */
  receive(text: string): void {
    this.buffer += text;
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    for (const line of lines) {
      if (!line.trim()) continue;
      let msg: ServerMessage;
      try {
        msg = parseServerLine(line);
      } catch (e) {
        this.notices.push(`protocol error: ${(e as Error).message}`);
        continue;
      }
      if (msg.type === "ack") {
        const entry = msg.id != null ? this.pending.get(msg.id) : undefined;
        if (entry) {
          entry.ack = msg;
          this.pending.delete(msg.id as number);
        }
        this.onAck(msg);
      } else {
        this.onState(msg);
      }
    }
  }

  send(cmd: Omit<CommandMessage, "proto" | "type" | "id">): CommandLogEntry {
    const id = this.nextId;
    this.nextId += 1;
    const full: CommandMessage = { proto: 1, type: "command", id, ...cmd };
    const entry: CommandLogEntry = { command: full, sentAt: this.now() };
    this.log.push(entry);
    this.pending.set(id, entry);
    const line = JSON.stringify(full) + "\n";
    if (this.connected) {
      this.socket!.send(line);
    } else {
      this.queue.push({ line, entry, queuedAt: this.now() });
      entry.note = "queued (disconnected)";
    }
    return entry;
  }

  /** Steering is rate limited; excess events are coalesced away. */
  steer(action: string): CommandLogEntry | null {
    const t = this.now();
    if (t - this.lastSteerAt < this.steerIntervalMs) {
      return null;
    }
    this.lastSteerAt = t;
    return this.send({ name: "steer", action });
  }

  pause(): CommandLogEntry {
    return this.send({ name: "PAUSE" });
  }

  run(): CommandLogEntry {
    return this.send({ name: "RUN" });
  }

  estop(): CommandLogEntry {
    return this.send({ name: "ESTOP" });
  }

  placeObstacle(polygon: number[][]): CommandLogEntry {
    return this.send({ name: "place_obstacle", polygon });
  }

  sendRndfPatch(ops: Record<string, unknown>[]): CommandLogEntry {
    return this.send({ name: "edit_rndf", ops });
  }

  /** Drop expired queued commands; send the rest when reconnected. */
  flushQueue(): void {
    const t = this.now();
    const keep: typeof this.queue = [];
    for (const item of this.queue) {
      if (t - item.queuedAt > this.queueTtlMs) {
        item.entry.note = "dropped (queue expired)";
        this.notices.push(`command ${item.entry.command.name} dropped after disconnect`);
      } else if (this.connected) {
        this.socket!.send(item.line);
        item.entry.note = "sent after reconnect";
      } else {
        keep.push(item);
      }
    }
    this.queue = keep;
  }
}

export { encodeCommand };
