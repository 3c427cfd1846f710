// Wire protocol shared with the session service: UTF-8 JSON frames over a
// WebSocket, one message per frame, schema version field mandatory.

export const SCHEMA_VERSION = 1;

export type ButtonName = "GO" | "STOP" | "CONFIRM" | "ENABLE";
export type ButtonEdge = "press" | "release";
export type Phase =
  | "idle"
  | "running"
  | "halted"
  | "awaiting_confirmation"
  | "force_guide";

export type Point2 = [number, number];
export type Triangle3 = [number, number, number][];

export interface HelloReply {
  v: number;
  type: "hello";
  role_granted: "operator" | "observer";
  session: string;
  width: number;
  height: number;
}

export interface PendingOutline {
  id: number;
  outline: Point2[];
}

export interface Snapshot {
  v: number;
  type: "snapshot";
  frame: number;
  t: number;
  mode: string;
  phase: Phase;
  task: number;
  status: string;
  danger_boundary: Point2[];
  robot_hull: Point2[];
  pending: PendingOutline[];
  buttons: { enable_held: boolean; switch_held: boolean };
  fence?: Triangle3[];
}

export interface ConfirmAck {
  v: number;
  type: "confirm_ack";
  ids: number[];
}

export interface MetricsMsg {
  v: number;
  type: "metrics";
  run_id: string;
  mode: string;
  total_time_s: number;
  robot_idle_time_s: number;
  halts: number;
  confirmations: number;
}

export interface ErrorMsg {
  v: number;
  type: "error";
  message: string;
}

export type ServerMessage = HelloReply | Snapshot | ConfirmAck | MetricsMsg | ErrorMsg;

const SERVER_TYPES = new Set(["hello", "snapshot", "confirm_ack", "metrics", "error"]);

export class ProtocolError extends Error {}

export function parseServerMessage(raw: string): ServerMessage {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch (e) {
    throw new ProtocolError(`frame is not valid JSON: ${e}`);
  }
  if (typeof msg !== "object" || msg === null || Array.isArray(msg)) {
    throw new ProtocolError("frame must be a JSON object");
  }
  const m = msg as Record<string, unknown>;
  if (m["v"] !== SCHEMA_VERSION) {
    throw new ProtocolError(`unsupported schema version ${String(m["v"])}`);
  }
  if (typeof m["type"] !== "string" || !SERVER_TYPES.has(m["type"])) {
    throw new ProtocolError(`unknown message type ${String(m["type"])}`);
  }
  return msg as ServerMessage;
}

export function helloMessage(role: "operator" | "observer", client: string, wantFence: boolean): string {
  return JSON.stringify({
    v: SCHEMA_VERSION,
    type: "hello",
    role,
    client,
    want_fence: wantFence,
  });
}

export function buttonMessage(button: ButtonName, edge: ButtonEdge, time: number): string {
  return JSON.stringify({ v: SCHEMA_VERSION, type: "button", button, edge, time });
}
