// Console view model: the only state the UI renders. Snapshots apply in
// frame order (stale frames dropped); the model never mutates safety state
// locally; every change round-trips through the session service. The
// ENABLE gating here mirrors the server rule for display purposes only.

import {
  ButtonEdge,
  ButtonName,
  MetricsMsg,
  Phase,
  PendingOutline,
  Point2,
  ServerMessage,
  Snapshot,
  Triangle3,
  buttonMessage,
} from "./protocol.js";

export interface ViewState {
  connected: boolean;
  role: "operator" | "observer" | null;
  session: string;
  frameWidth: number;
  frameHeight: number;
  frame: number;
  simTime: number;
  phase: Phase;
  task: number;
  status: string;
  dangerBoundary: Point2[];
  robotHull: Point2[];
  pending: PendingOutline[];
  fence: Triangle3[] | null;
  serverEnableHeld: boolean;
  metrics: MetricsMsg | null;
  lastError: string;
  latencyMs: number;
}

export class ConsoleModel {
  readonly state: ViewState = {
    connected: false,
    role: null,
    session: "",
    frameWidth: 0,
    frameHeight: 0,
    frame: -1,
    simTime: 0,
    phase: "idle",
    task: 0,
    status: "connecting...",
    dangerBoundary: [],
    robotHull: [],
    pending: [],
    fence: null,
    serverEnableHeld: false,
    metrics: null,
    lastError: "",
    latencyMs: 0,
  };

  // local ENABLE latch: the operator physically holds the button here
  enableHeld = false;
  notices: string[] = [];
  private lastSnapshotAt = 0;

  connectionChanged(connected: boolean): void {
    this.state.connected = connected;
    if (!connected) {
      this.state.status = "disconnected: reconnecting...";
      this.state.role = null;
    }
  }

  /** Apply one server message; returns false for stale/ignored frames. */
  applyServerMessage(msg: ServerMessage, nowMs: number = Date.now()): boolean {
    switch (msg.type) {
      case "hello":
        this.state.role = msg.role_granted;
        this.state.session = msg.session;
        this.state.frameWidth = msg.width;
        this.state.frameHeight = msg.height;
        return true;
      case "snapshot":
        return this.applySnapshot(msg, nowMs);
      case "confirm_ack":
        this.notices.push(`regions confirmed: ${msg.ids.join(", ")}`);
        return true;
      case "metrics":
        this.state.metrics = msg;
        return true;
      case "error":
        this.state.lastError = msg.message;
        this.notices.push(`service: ${msg.message}`);
        return true;
    }
  }

  private applySnapshot(snap: Snapshot, nowMs: number): boolean {
    if (snap.frame <= this.state.frame) {
      return false; // out-of-order or duplicate: render only the newest data
    }
    if (this.lastSnapshotAt > 0) {
      this.state.latencyMs = nowMs - this.lastSnapshotAt;
    }
    this.lastSnapshotAt = nowMs;
    this.state.frame = snap.frame;
    this.state.simTime = snap.t;
    this.state.phase = snap.phase;
    this.state.task = snap.task;
    this.state.status = snap.status;
    this.state.dangerBoundary = snap.danger_boundary;
    this.state.robotHull = snap.robot_hull;
    this.state.pending = snap.pending;
    this.state.serverEnableHeld = snap.buttons.enable_held;
    this.state.fence = snap.fence ?? null;
    return true;
  }

  /** Mirror of the server's gating rule, for enabling/disabling controls. */
  buttonArmed(button: ButtonName): boolean {
    if (this.state.role !== "operator") {
      return false;
    }
    if (button === "GO" || button === "CONFIRM") {
      return this.enableHeld;
    }
    return true; // STOP and ENABLE are never gated
  }

  /**
   * Produce the wire event for a button edge, or null when suppressed
   * (observer role, or GO/CONFIRM without ENABLE). The server re-checks.
   */
  pressButton(button: ButtonName, edge: ButtonEdge, timeS: number): string | null {
    if (this.state.role !== "operator") {
      this.notices.push("buttons disabled: operator role not held");
      return null;
    }
    if (edge === "press" && !this.buttonArmed(button)) {
      this.notices.push(`${button} needs ENABLE held`);
      return null;
    }
    if (button === "ENABLE") {
      this.enableHeld = edge === "press";
    }
    return buttonMessage(button, edge, timeS);
  }
}
