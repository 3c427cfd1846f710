// Browser entry point: wires the connection, view model, canvases, and the
// GO / STOP / CONFIRM / ENABLE controls (press-and-hold for ENABLE).

import { ConsoleClient } from "./client.js";
import { ButtonName } from "./protocol.js";
import { drawWorkspace } from "./render2d.js";
import { DEFAULT_FENCE_CAMERA, drawFence } from "./render3d.js";
import { ConsoleModel } from "./viewmodel.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const port = params.get("port") ?? "7700";

const model = new ConsoleModel();
const client = new ConsoleClient({
  url: `ws://${host}:${port}/console`,
  role: "operator",
  clientName: "browser-console",
  wantFence: true,
});

const workspace = byId<HTMLCanvasElement>("workspace");
const fenceCanvas = byId<HTMLCanvasElement>("fence");
const statusBox = byId<HTMLDivElement>("status");
const noticeBox = byId<HTMLDivElement>("notices");
const banner = byId<HTMLDivElement>("banner");
const fenceCam = { ...DEFAULT_FENCE_CAMERA };

client.onconnection = (up) => {
  model.connectionChanged(up);
  banner.style.display = up ? "none" : "block";
  render();
};
client.onmessage = (msg) => {
  model.applyServerMessage(msg);
  render();
};

function sendEdge(button: ButtonName, edge: "press" | "release"): void {
  const payload = model.pressButton(button, edge, Date.now() / 1000);
  if (payload) client.send(payload);
  render();
}

for (const name of ["GO", "STOP", "CONFIRM", "ENABLE"] as ButtonName[]) {
  const el = byId<HTMLButtonElement>(`btn-${name.toLowerCase()}`);
  if (name === "ENABLE") {
    el.addEventListener("mousedown", () => sendEdge(name, "press"));
    el.addEventListener("mouseup", () => sendEdge(name, "release"));
    el.addEventListener("mouseleave", () => {
      if (model.enableHeld) sendEdge(name, "release");
    });
  } else {
    el.addEventListener("click", () => sendEdge(name, "press"));
  }
}

fenceCanvas.addEventListener("mousemove", (ev) => {
  if (ev.buttons & 1) {
    fenceCam.yaw += ev.movementX * 0.01;
    fenceCam.pitch = Math.min(1.4, Math.max(0.05, fenceCam.pitch + ev.movementY * 0.01));
    render();
  }
});

function render(): void {
  const s = model.state;
  const ctx = workspace.getContext("2d");
  if (ctx) drawWorkspace(ctx, s, workspace.width, workspace.height);
  const fctx = fenceCanvas.getContext("2d");
  if (fctx) drawFence(fctx, s.fence, fenceCam, fenceCanvas.width, fenceCanvas.height);

  const phaseTag = s.phase.replace(/_/g, " ");
  statusBox.innerHTML =
    `<span class="phase phase-${s.phase}">${phaseTag}</span>` +
    `<span class="task">task ${s.task || "-"}</span>` +
    `<div class="text">${s.status}</div>` +
    (s.metrics
      ? `<div class="metrics">done: total ${s.metrics.total_time_s.toFixed(1)}s, ` +
        `idle ${s.metrics.robot_idle_time_s.toFixed(1)}s, ` +
        `${s.metrics.halts} halts, ${s.metrics.confirmations} confirmations</div>`
      : "");
  for (const name of ["GO", "CONFIRM"] as ButtonName[]) {
    const el = byId<HTMLButtonElement>(`btn-${name.toLowerCase()}`);
    el.classList.toggle("armed", model.buttonArmed(name));
  }
  byId<HTMLButtonElement>("btn-enable").classList.toggle("held", model.enableHeld);
  noticeBox.textContent = model.notices.slice(-4).join("\n");
}

client.connect();
render();
