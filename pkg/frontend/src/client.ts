// WebSocket connection to the session service with automatic reconnect.
// The browser's native WebSocket is used; tests substitute a compatible
// implementation through the constructor argument.

import { helloMessage, parseServerMessage, ServerMessage } from "./protocol.js";

export type WebSocketFactory = (url: string) => WebSocket;

export interface ClientOptions {
  url: string;
  role: "operator" | "observer";
  clientName: string;
  wantFence?: boolean;
  reconnectDelayMs?: number;
  factory?: WebSocketFactory;
}

export class ConsoleClient {
  private ws: WebSocket | null = null;
  private closed = false;
  onmessage: (msg: ServerMessage) => void = () => {};
  onconnection: (up: boolean) => void = () => {};

  constructor(private readonly opts: ClientOptions) {}

  connect(): void {
    const factory = this.opts.factory ?? ((url: string) => new WebSocket(url));
    const ws = factory(this.opts.url);
    this.ws = ws;
    ws.addEventListener("open", () => {
      this.onconnection(true);
      ws.send(
        helloMessage(this.opts.role, this.opts.clientName, this.opts.wantFence ?? false),
      );
    });
    ws.addEventListener("message", (ev: MessageEvent) => {
      let msg: ServerMessage;
      try {
        msg = parseServerMessage(String(ev.data));
      } catch {
        return; // unparseable frames are dropped, the service stays authoritative
      }
      this.onmessage(msg);
    });
    ws.addEventListener("close", () => {
      this.onconnection(false);
      if (!this.closed) {
        setTimeout(() => this.connect(), this.opts.reconnectDelayMs ?? 1000);
      }
    });
    ws.addEventListener("error", () => {
      try {
        ws.close();
      } catch {
        /* already closing */
      }
    });
  }

  send(payload: string): void {
    if (this.ws && this.ws.readyState === 1) {
      this.ws.send(payload);
    }
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
