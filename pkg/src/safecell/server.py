"""Session service: one TCP port serving both wire transports.

Connections that start with an HTTP GET are upgraded to WebSocket (for the
browser console); anything else speaks the length-prefixed frame protocol.
Any number of observers may connect; exactly one client holds the operator
role and only its button events are accepted. The scenario engine runs on
its own single logical clock; inbound buttons are queued and applied at
tick boundaries.
"""

from __future__ import annotations

import json
import queue
import socket
import threading
import time

from .protocol import (
    FrameReader,
    ProtocolError,
    WSFrameReader,
    encode_message,
    parse_message,
    websocket_close_frame,
    websocket_encode_text,
    websocket_handshake_response,
    websocket_pong,
)
from .session import ButtonEvent


class _Client:
    _next_id = 1

    def __init__(self, sock: socket.socket, addr):
        self.sock = sock
        self.addr = addr
        self.id = _Client._next_id
        _Client._next_id += 1
        self.transport = "tcp"
        self.role = "observer"
        self.want_fence = False
        self.outbox: queue.Queue = queue.Queue(maxsize=256)
        self.alive = True

    def enqueue(self, data: bytes) -> None:
        while True:
            try:
                self.outbox.put_nowait(data)
                return
            except queue.Full:
                try:
                    self.outbox.get_nowait()  # drop the oldest frame
                except queue.Empty:
                    pass


class SessionServer:
    """Accepts console clients and bridges them to a scenario engine."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(8)
        self.host, self.port = self._listener.getsockname()
        self.engine = None
        self._clients: list[_Client] = []
        self._lock = threading.Lock()
        self._operator: _Client | None = None
        self._stop = threading.Event()
        self._accept_thread: threading.Thread | None = None
        self.session_name = "safecell"

    # -- lifecycle ---------------------------------------------------------

    def attach_engine(self, engine) -> None:
        self.engine = engine
        engine.snapshot_hook = self.broadcast_message
        engine.wire_hook = self.broadcast_message

    def start(self) -> None:
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def flush(self, timeout: float = 2.0) -> None:
        """Wait until queued outbound frames have been handed to the sockets."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                pending = any(not c.outbox.empty() for c in self._clients)
            if not pending:
                time.sleep(0.05)  # let in-flight sendall calls finish
                return
            time.sleep(0.02)

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            self._drop(c)

    # -- outbound ------------------------------------------------------------

    def broadcast_message(self, msg: dict) -> None:
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            if msg.get("type") == "snapshot" and "fence" in msg and not c.want_fence:
                slim = {k: v for k, v in msg.items() if k != "fence"}
                self._send(c, slim)
            else:
                self._send(c, msg)

    def _send(self, client: _Client, msg: dict) -> None:
        if not client.alive:
            return
        if client.transport == "ws":
            payload = json.dumps({"v": 1, **msg} if "v" not in msg else msg,
                                 separators=(",", ":"))
            client.enqueue(websocket_encode_text(payload))
        else:
            client.enqueue(encode_message(msg))

    # -- inbound ----------------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, addr = self._listener.accept()
            except OSError:
                return
            client = _Client(sock, addr)
            with self._lock:
                self._clients.append(client)
            threading.Thread(target=self._client_reader, args=(client,), daemon=True).start()
            threading.Thread(target=self._client_writer, args=(client,), daemon=True).start()

    def _client_writer(self, client: _Client) -> None:
        while client.alive and not self._stop.is_set():
            try:
                data = client.outbox.get(timeout=0.25)
            except queue.Empty:
                continue
            try:
                client.sock.sendall(data)
            except OSError:
                self._drop(client)
                return

    def _client_reader(self, client: _Client) -> None:
        sock = client.sock
        try:
            first = sock.recv(4096)
            if not first:
                self._drop(client)
                return
            if first.startswith(b"GET "):
                self._websocket_session(client, first)
            else:
                self._tcp_session(client, first)
        except (OSError, ProtocolError):
            self._drop(client)

    def _tcp_session(self, client: _Client, first: bytes) -> None:
        reader = FrameReader()
        self._handle_payloads(client, reader.feed(first))
        while client.alive and not self._stop.is_set():
            data = client.sock.recv(4096)
            if not data:
                break
            self._handle_payloads(client, reader.feed(data))
        self._drop(client)

    def _websocket_session(self, client: _Client, first: bytes) -> None:
        buf = bytearray(first)
        while b"\r\n\r\n" not in buf:
            data = client.sock.recv(4096)
            if not data:
                self._drop(client)
                return
            buf.extend(data)
        head, _, rest = bytes(buf).partition(b"\r\n\r\n")
        client.sock.sendall(websocket_handshake_response(head))
        client.transport = "ws"
        reader = WSFrameReader()
        events = reader.feed(rest) if rest else []
        if not self._handle_ws_events(client, events):
            return
        while client.alive and not self._stop.is_set():
            data = client.sock.recv(4096)
            if not data:
                break
            if not self._handle_ws_events(client, reader.feed(data)):
                return
        self._drop(client)

    def _handle_ws_events(self, client: _Client, events) -> bool:
        for kind, payload in events:
            if kind == "text":
                self._handle_payloads(client, [payload])
            elif kind == "ping":
                client.enqueue(websocket_pong(payload))
            elif kind == "close":
                client.enqueue(websocket_close_frame())
                self._drop(client)
                return False
        return True

    def _handle_payloads(self, client: _Client, payloads) -> None:
        for payload in payloads:
            try:
                msg = parse_message(payload)
            except ProtocolError as e:
                self._send(client, {"v": 1, "type": "error", "message": str(e)})
                continue
            self._dispatch(client, msg)

    def _dispatch(self, client: _Client, msg: dict) -> None:
        if msg["type"] == "hello":
            want_role = msg.get("role", "observer")
            granted = "observer"
            with self._lock:
                if want_role == "operator" and self._operator is None:
                    self._operator = client
                    granted = "operator"
            client.role = granted
            client.want_fence = bool(msg.get("want_fence", False))
            k = self.engine.cfg.camera.intrinsics if self.engine else None
            self._send(
                client,
                {
                    "v": 1,
                    "type": "hello",
                    "role_granted": granted,
                    "session": self.session_name,
                    "width": k.width if k else 0,
                    "height": k.height if k else 0,
                },
            )
            if self.engine is not None and client.want_fence:
                self.engine.include_fence = True
        elif msg["type"] == "button":
            if client.role != "operator":
                self._send(client, {"v": 1, "type": "error",
                                    "message": "button rejected: operator role not held"})
                return
            if self.engine is None:
                self._send(client, {"v": 1, "type": "error",
                                    "message": "no active session"})
                return
            try:
                ev = ButtonEvent(
                    button=str(msg.get("button")),
                    edge=str(msg.get("edge")),
                    time=float(msg.get("time", 0.0)),
                    source=f"client-{client.id}",
                )
            except (TypeError, ValueError) as e:
                self._send(client, {"v": 1, "type": "error", "message": str(e)})
                return
            self.engine.queue_button(ev, stamp_arrival=True)
        else:
            self._send(client, {"v": 1, "type": "error",
                                "message": f"unexpected message type {msg['type']!r}"})

    def _drop(self, client: _Client) -> None:
        if not client.alive:
            return
        client.alive = False
        with self._lock:
            if client in self._clients:
                self._clients.remove(client)
            if self._operator is client:
                self._operator = None
        try:
            client.sock.close()
        except OSError:
            pass


def realtime_pacer(speed: float = 1.0):
    """Pace hook aligning sim time to the wall clock (scaled by ``speed``)."""
    start = time.monotonic()

    def pace(t: float) -> None:
        delay = (start + t / speed) - time.monotonic()
        if delay > 0:
            time.sleep(delay)

    return pace
