/**
 * End-to-end against a live simulation service: spawns the Python server,
 * connects over the websocket stream and exercises PAUSE / RUN / ESTOP.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { Connection } from "../src/connection.js";
import { StateMessage } from "../src/protocol.js";

const PORT = 8731;
const REPO_ROOT = join(__dirname, "..", "..");

const RNDF = `segment 1
lane 1.1 4.0
${Array.from({ length: 30 }, (_, i) => `waypoint 1.1.${i + 1} ${i * 10}.0 0.0`).join("\n")}
checkpoint 1.1.30 1
`;

const SCENARIO = `name: live
rndf: live.rndf
mdf:
  checkpoints: [1]
  default_max_mps: 9.0
duration: 600
seed: 5
`;

let server: ChildProcess;

async function waitForHealth(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`http://127.0.0.1:${PORT}/health`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("server never became healthy");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "cockpit-live-"));
  writeFileSync(join(dir, "live.rndf"), RNDF);
  const scenarioPath = join(dir, "live.yaml");
  writeFileSync(scenarioPath, SCENARIO);
  server = spawn(
    "python3", ["-m", "drivesim.cli", "serve", scenarioPath,
      "--port", String(PORT), "--host", "127.0.0.1"],
    { cwd: REPO_ROOT, stdio: "ignore" });
  await waitForHealth();
}, 60000);

afterAll(() => {
  server?.kill("SIGTERM");
});

interface Client {
  ws: WebSocket;
  conn: Connection;
  states: StateMessage[];
  close(): void;
  waitForState(pred: (s: StateMessage) => boolean, timeoutMs?: number): Promise<StateMessage>;
}

async function openClient(): Promise<Client> {
  const ws = new WebSocket(`ws://127.0.0.1:${PORT}/stream`);
  const conn = new Connection();
  const states: StateMessage[] = [];
  conn.onState = (msg) => states.push(msg);
  await new Promise<void>((resolve, reject) => {
    ws.on("open", () => resolve());
    ws.on("error", reject);
  });
  conn.attach({
    get readyState() { return ws.readyState; },
    send: (data) => ws.send(data),
  });
  ws.on("message", (data) => conn.receive(data.toString()));
  return {
    ws, conn, states,
    close: () => ws.close(),
    waitForState(pred, timeoutMs = 30000) {
      return new Promise((resolve, reject) => {
        const t0 = Date.now();
        const timer = setInterval(() => {
          const hit = states.find(pred);
          if (hit) {
            clearInterval(timer);
            resolve(hit);
          } else if (Date.now() - t0 > timeoutMs) {
            clearInterval(timer);
            reject(new Error(`no matching state after ${timeoutMs} ms; `
              + `last: ${JSON.stringify(states.at(-1))}`));
          }
        }, 50);
      });
    },
  };
}

describe("live cockpit round trip", () => {
  it("receives proto-1 states and drives PAUSE/RUN/ESTOP", async () => {
    const client = await openClient();
    try {
      const first = await client.waitForState((s) => s.type === "state");
      expect(first.proto).toBe(1);

      // let the vehicle accelerate
      await client.waitForState((s) => s.ego.v > 3.0, 60000);

      // PAUSE: ack ok, the state stream goes paused and the car stops
      const pauseEntry = client.conn.pause();
      await client.waitForState((s) => s.paused === true);
      expect(pauseEntry.ack?.ok).toBe(true);
      await client.waitForState((s) => s.paused === true && Math.abs(s.ego.v) < 0.1,
        60000);

      // RUN: resumes motion
      const runEntry = client.conn.run();
      await client.waitForState((s) => s.paused === false);
      expect(runEntry.ack?.ok).toBe(true);
      await client.waitForState((s) => s.ego.v > 2.0, 60000);

      // ESTOP: latches and decays the speed trace to zero
      const estopEntry = client.conn.estop();
      await client.waitForState((s) => s.estop === true);
      expect(estopEntry.ack?.ok).toBe(true);
      await client.waitForState((s) => s.estop && Math.abs(s.ego.v) < 0.05, 60000);
    } finally {
      client.close();
    }
  }, 240000);

  it("rejects a malformed rndf patch without breaking the stream", async () => {
    const client = await openClient();
    try {
      await client.waitForState((s) => s.type === "state");
      const entry = client.conn.sendRndfPatch([
        { op: "add_exit", from: "1.1.1", to: "9.9.9" },
      ]);
      const t0 = Date.now();
      while (!entry.ack && Date.now() - t0 < 20000) {
        await new Promise((r) => setTimeout(r, 50));
      }
      expect(entry.ack).toBeTruthy();
      expect(entry.ack!.ok).toBe(false);
      // stream still alive
      const before = client.states.length;
      await client.waitForState(() => client.states.length > before);
    } finally {
      client.close();
    }
  }, 120000);
});
