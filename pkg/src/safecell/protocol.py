"""Wire protocol for console clients.

Frames are UTF-8 JSON objects. Over a plain TCP stream each frame is
prefixed with a 4-byte big-endian length; over the browser-compatible
WebSocket upgrade each frame travels as one text message. Every frame
carries a mandatory schema version field ``v`` and a ``type``:

==============  =========  ==========================================
type            direction  fields
==============  =========  ==========================================
hello           c->s       role ("operator"|"observer"), client,
                           want_fence (bool, optional)
hello           s->c       role_granted, session, width, height
snapshot        s->c       frame, t, mode, phase, task, status,
                           danger_boundary, robot_hull, pending,
                           buttons, fence (when requested)
button          c->s       button (GO|STOP|CONFIRM|ENABLE),
                           edge (press|release), time
confirm_ack     s->c       ids (confirmed region ids)
metrics         s->c       total_time_s, robot_idle_time_s, halts,
                           confirmations, mode, run_id
error           s->c       message
==============  =========  ==========================================

Unknown message types are answered with an ``error`` frame, never a
dropped connection.
"""

from __future__ import annotations

import base64
import hashlib
import json
import struct

SCHEMA_VERSION = 1
MESSAGE_TYPES = ("hello", "snapshot", "button", "confirm_ack", "metrics", "error")
MAX_FRAME_BYTES = 16 * 1024 * 1024

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class ProtocolError(ValueError):
    pass


def encode_message(msg: dict) -> bytes:
    """Length-prefixed JSON frame for the plain TCP transport."""
    if "v" not in msg:
        msg = {"v": SCHEMA_VERSION, **msg}
    payload = json.dumps(msg, separators=(",", ":")).encode("utf-8")
    if len(payload) > MAX_FRAME_BYTES:
        raise ProtocolError("frame too large")
    return struct.pack(">I", len(payload)) + payload


def parse_message(payload: bytes | str) -> dict:
    """Decode and validate one JSON frame body."""
    try:
        msg = json.loads(payload)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ProtocolError(f"frame is not valid JSON: {e}") from e
    if not isinstance(msg, dict):
        raise ProtocolError("frame must be a JSON object")
    if msg.get("v") != SCHEMA_VERSION:
        raise ProtocolError(f"unsupported schema version {msg.get('v')!r}")
    if msg.get("type") not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg.get('type')!r}")
    return msg


class FrameReader:
    """Incremental decoder for the length-prefixed transport."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[bytes]:
        """Append raw bytes; return any complete frame payloads."""
        self._buf.extend(data)
        frames = []
        while True:
            if len(self._buf) < 4:
                break
            (length,) = struct.unpack(">I", self._buf[:4])
            if length > MAX_FRAME_BYTES:
                raise ProtocolError(f"frame length {length} exceeds limit")
            if len(self._buf) < 4 + length:
                break
            frames.append(bytes(self._buf[4 : 4 + length]))
            del self._buf[: 4 + length]
        return frames


# ---------------------------------------------------------------------------
# minimal RFC 6455 WebSocket framing (server side, text frames)


def websocket_accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def websocket_handshake_response(request_head: bytes) -> bytes:
    """101 response for an HTTP upgrade request (raises on a bad request)."""
    try:
        head = request_head.decode("latin-1")
    except UnicodeDecodeError as e:
        raise ProtocolError("malformed upgrade request") from e
    lines = head.split("\r\n")
    headers = {}
    for line in lines[1:]:
        if ":" in line:
            k, v = line.split(":", 1)
            headers[k.strip().lower()] = v.strip()
    if "websocket" not in headers.get("upgrade", "").lower():
        raise ProtocolError("not a websocket upgrade request")
    key = headers.get("sec-websocket-key")
    if not key:
        raise ProtocolError("missing Sec-WebSocket-Key")
    accept = websocket_accept_key(key)
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
    ).encode("ascii")


def websocket_encode_text(payload: bytes | str, mask: bool = False) -> bytes:
    """One FIN text frame. Servers send unmasked; clients must mask."""
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    header = bytearray([0x81])
    n = len(payload)
    mask_bit = 0x80 if mask else 0x00
    if n < 126:
        header.append(mask_bit | n)
    elif n < 1 << 16:
        header.append(mask_bit | 126)
        header += struct.pack(">H", n)
    else:
        header.append(mask_bit | 127)
        header += struct.pack(">Q", n)
    if mask:
        key = hashlib.sha256(payload).digest()[:4]  # any 4 bytes work
        header += key
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return bytes(header) + payload


def websocket_close_frame(code: int = 1000) -> bytes:
    return bytes([0x88, 0x02]) + struct.pack(">H", code)


def websocket_pong(payload: bytes = b"") -> bytes:
    return bytes([0x8A, len(payload)]) + payload


class WSFrameReader:
    """Incremental parser for client->server WebSocket frames.

    Yields ("text", payload) / ("close", b"") / ("ping", payload) tuples.
    Fragmented messages are reassembled; binary frames are rejected.
    """

    def __init__(self):
        self._buf = bytearray()
        self._fragments: list[bytes] = []

    def feed(self, data: bytes) -> list[tuple[str, bytes]]:
        self._buf.extend(data)
        out = []
        while True:
            frame = self._try_parse()
            if frame is None:
                break
            out.append(frame)
        return out

    def _try_parse(self):
        buf = self._buf
        if len(buf) < 2:
            return None
        b0, b1 = buf[0], buf[1]
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        length = b1 & 0x7F
        idx = 2
        if length == 126:
            if len(buf) < idx + 2:
                return None
            (length,) = struct.unpack(">H", buf[idx : idx + 2])
            idx += 2
        elif length == 127:
            if len(buf) < idx + 8:
                return None
            (length,) = struct.unpack(">Q", buf[idx : idx + 8])
            idx += 8
        if length > MAX_FRAME_BYTES:
            raise ProtocolError("websocket frame too large")
        mask_key = b""
        if masked:
            if len(buf) < idx + 4:
                return None
            mask_key = bytes(buf[idx : idx + 4])
            idx += 4
        if len(buf) < idx + length:
            return None
        payload = bytes(buf[idx : idx + length])
        del buf[: idx + length]
        if masked:
            payload = bytes(b ^ mask_key[i % 4] for i, b in enumerate(payload))
        if opcode == 0x8:
            return ("close", payload)
        if opcode == 0x9:
            return ("ping", payload)
        if opcode == 0xA:
            return ("pong", payload)
        if opcode == 0x1 or opcode == 0x0:
            if not fin or opcode == 0x0:
                self._fragments.append(payload)
                if not fin:
                    return ("partial", b"")
                whole = b"".join(self._fragments)
                self._fragments = []
                return ("text", whole)
            return ("text", payload)
        if opcode == 0x2:
            raise ProtocolError("binary websocket frames are not supported")
        raise ProtocolError(f"unsupported websocket opcode {opcode}")
