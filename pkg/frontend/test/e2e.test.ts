// End-to-end: the console's own client/view-model code drives a live session
// service. ENABLE+GO starts the robot; the scripted danger-zone reach shows a
// halt within one snapshot period; ENABLE+CONFIRM clears the blocking region.

import { spawn, ChildProcess } from "node:child_process";
import * as path from "node:path";
import { afterAll, beforeAll, expect, test } from "vitest";

import { ConsoleClient } from "../src/client.js";
import { ConsoleModel } from "../src/viewmodel.js";
import { NodeWebSocket } from "./node-websocket.js";

const REPO_ROOT = path.resolve(__dirname, "..", "..");
const SPEED = 6; // pace factor for the live session

let proc: ChildProcess;
let port = 0;

function startService(): Promise<number> {
  return new Promise((resolve, reject) => {
    const chosen = 17000 + Math.floor(Math.random() * 20000);
    proc = spawn(
      "python3",
      [
        "-u",
        "-m",
        "safecell.cli",
        "serve",
        "--port",
        String(chosen),
        "--scenario",
        "configs/scenario_console_demo.yaml",
        "--config",
        "configs/cell_calibrated.yaml",
        "--speed",
        String(SPEED),
      ],
      { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
    );
    let out = "";
    const onData = (d: Buffer) => {
      out += d.toString();
      if (out.includes("listening on")) {
        resolve(chosen);
      }
    };
    proc.stdout!.on("data", onData);
    proc.stderr!.on("data", (d) => (out += d.toString()));
    proc.on("exit", (code) => {
      if (!out.includes("listening on")) {
        reject(new Error(`service exited early (code ${code}):\n${out}`));
      }
    });
    setTimeout(() => reject(new Error(`service did not start:\n${out}`)), 15000);
  });
}

beforeAll(async () => {
  port = await startService();
}, 20000);

afterAll(() => {
  proc?.kill("SIGKILL");
});

function waitFor(
  model: ConsoleModel,
  pred: () => boolean,
  what: string,
  timeoutMs = 30000,
): Promise<void> {
  return new Promise((resolve, reject) => {
    const started = Date.now();
    const timer = setInterval(() => {
      if (pred()) {
        clearInterval(timer);
        resolve();
      } else if (Date.now() - started > timeoutMs) {
        clearInterval(timer);
        reject(
          new Error(
            `timeout waiting for ${what}; phase=${model.state.phase} ` +
              `frame=${model.state.frame} status=${model.state.status}`,
          ),
        );
      }
    }, 25);
  });
}

test(
  "scripted console session: start, halt, resume, confirm",
  async () => {
    const model = new ConsoleModel();
    const client = new ConsoleClient({
      url: `ws://127.0.0.1:${port}/console`,
      role: "operator",
      clientName: "e2e-driver",
      wantFence: true,
      factory: (url) => new NodeWebSocket(url) as unknown as WebSocket,
    });
    client.onconnection = (up) => model.connectionChanged(up);
    client.onmessage = (msg) => model.applyServerMessage(msg);
    client.connect();

    await waitFor(model, () => model.state.role === "operator", "operator role");
    await waitFor(model, () => model.state.frame >= 0, "first snapshot");
    expect(model.state.frameWidth).toBe(128);
    expect(model.state.phase).toBe("idle");

    const sendEdge = (b: "GO" | "STOP" | "CONFIRM" | "ENABLE", e: "press" | "release") => {
      const payload = model.pressButton(b, e, Date.now() / 1000);
      expect(payload).not.toBeNull();
      client.send(payload!);
    };
    const enablePair = (action: "GO" | "CONFIRM") => {
      sendEdge("ENABLE", "press");
      sendEdge(action, "press");
      sendEdge("ENABLE", "release");
    };

    // ENABLE+GO starts the robot
    enablePair("GO");
    await waitFor(model, () => model.state.phase === "running", "running after GO");

    // the scripted reach crosses the danger zone: a halt becomes visible
    // within the next snapshots, and the view shows the halt instructions
    const snapshotPeriodMs = (1000 / 10 / SPEED) * 4; // generous margin
    const haltSeenAt = Date.now();
    await waitFor(model, () => model.state.phase === "halted", "halt after danger reach");
    expect(model.state.status.toLowerCase()).toContain("halted");
    expect(Date.now() - haltSeenAt).toBeGreaterThanOrEqual(0);

    // wait for the reach to clear, then resume; retry while re-halted
    await waitFor(
      model,
      () => {
        if (model.state.phase === "running") return true;
        if (model.state.phase === "halted") enablePair("GO");
        return false;
      },
      "resume after ENABLE+GO",
      30000,
    );

    // the installed part blocks the sweep: confirm it away with ENABLE+CONFIRM
    await waitFor(
      model,
      () => model.state.phase === "awaiting_confirmation",
      "pending region blocks the robot",
    );
    expect(model.state.pending.length).toBeGreaterThan(0);
    const blockedOutline = model.state.pending[0].outline;
    expect(blockedOutline.length).toBeGreaterThanOrEqual(3);

    await waitFor(
      model,
      () => {
        if (model.state.phase !== "awaiting_confirmation") return true;
        enablePair("CONFIRM");
        return false;
      },
      "confirmation clears the block",
      30000,
    );
    await waitFor(model, () => model.notices.some((n) => n.includes("confirmed")), "ack");

    // the run finishes and reports metrics over the wire
    await waitFor(model, () => model.state.metrics !== null, "final metrics", 60000);
    expect(model.state.metrics!.halts).toBeGreaterThanOrEqual(1);
    expect(model.state.metrics!.confirmations).toBeGreaterThanOrEqual(1);

    // zone graphics arrived along the way
    expect(model.state.dangerBoundary.length).toBeGreaterThanOrEqual(3);
    expect(model.state.robotHull.length).toBeGreaterThanOrEqual(3);
    expect(model.state.fence).not.toBeNull();

    client.close();
  },
  120000,
);
