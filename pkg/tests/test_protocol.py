import base64
import json
import socket
import struct
import threading
import time

import pytest

from safecell.configs import default_cell_config, load_scenario, with_overrides
from safecell.protocol import (
    FrameReader,
    ProtocolError,
    WSFrameReader,
    encode_message,
    parse_message,
    websocket_accept_key,
    websocket_encode_text,
    websocket_handshake_response,
)
from safecell.scenario import ScenarioEngine
from safecell.server import SessionServer, realtime_pacer


# -- framing -------------------------------------------------------------------


def test_encode_decode_round_trip():
    msg = {"type": "hello", "role": "observer", "client": "t"}
    data = encode_message(msg)
    reader = FrameReader()
    payloads = reader.feed(data)
    assert len(payloads) == 1
    decoded = parse_message(payloads[0])
    assert decoded["type"] == "hello" and decoded["v"] == 1


def test_frame_reader_handles_partial_and_coalesced_frames():
    a = encode_message({"type": "hello"})
    b = encode_message({"type": "metrics"})
    reader = FrameReader()
    assert reader.feed(a[:3]) == []
    frames = reader.feed(a[3:] + b)
    assert len(frames) == 2


def test_unknown_type_rejected():
    with pytest.raises(ProtocolError, match="unknown message type"):
        parse_message(json.dumps({"v": 1, "type": "detonate"}))


def test_wrong_schema_version_rejected():
    with pytest.raises(ProtocolError, match="schema version"):
        parse_message(json.dumps({"v": 99, "type": "hello"}))


def test_non_json_rejected():
    with pytest.raises(ProtocolError, match="JSON"):
        parse_message(b"\xff\x00garbage")


# -- websocket framing -----------------------------------------------------------


def test_accept_key_matches_rfc_example():
    # the worked example key from the protocol RFC
    assert (
        websocket_accept_key("dGhlIHNhbXBsZSBub25jZQ==")
        == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="
    )


def test_handshake_response_contains_accept():
    req = (
        b"GET / HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
        b"Connection: Upgrade\r\nSec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\n"
        b"Sec-WebSocket-Version: 13\r\n"
    )
    resp = websocket_handshake_response(req)
    assert b"101 Switching Protocols" in resp
    assert b"s3pPLMBiTxaQ9kYGzzhZRbK+xOo=" in resp


def test_handshake_rejects_plain_http():
    with pytest.raises(ProtocolError):
        websocket_handshake_response(b"GET / HTTP/1.1\r\nHost: x\r\n")


def _masked_text_frame(payload: bytes, key=b"\x01\x02\x03\x04") -> bytes:
    header = bytearray([0x81])
    n = len(payload)
    if n < 126:
        header.append(0x80 | n)
    else:
        header.append(0x80 | 126)
        header += struct.pack(">H", n)
    header += key
    return bytes(header) + bytes(b ^ key[i % 4] for i, b in enumerate(payload))


def test_ws_reader_unmasks_client_frames():
    reader = WSFrameReader()
    events = reader.feed(_masked_text_frame(b'{"v":1,"type":"hello"}'))
    assert events == [("text", b'{"v":1,"type":"hello"}')]


def test_ws_reader_partial_bytes():
    frame = _masked_text_frame(b"hello there")
    reader = WSFrameReader()
    assert reader.feed(frame[:5]) == []
    assert reader.feed(frame[5:]) == [("text", b"hello there")]


def test_ws_reader_large_frame_uses_extended_length():
    payload = b"x" * 300
    reader = WSFrameReader()
    assert reader.feed(_masked_text_frame(payload)) == [("text", payload)]


def test_ws_server_frames_parse_back():
    data = websocket_encode_text('{"v":1,"type":"error"}')
    # server frames are unmasked text frames
    assert data[0] == 0x81
    length = data[1] & 0x7F
    assert data[2 : 2 + length] == b'{"v":1,"type":"error"}'


def test_ws_close_and_ping_events():
    reader = WSFrameReader()
    close = bytes([0x88, 0x80]) + b"\x00\x00\x00\x00"
    assert reader.feed(close) == [("close", b"")]
    ping = bytes([0x89, 0x84]) + b"\x01\x01\x01\x01" + bytes(b ^ 1 for b in b"abcd")
    assert WSFrameReader().feed(ping) == [("ping", b"abcd")]


# -- live server ------------------------------------------------------------------


@pytest.fixture()
def live_session():
    cfg = with_overrides(default_cell_config(), max_sim_time_s=300.0)
    script = load_scenario("configs/scenario_console_demo.yaml")
    engine = ScenarioEngine(
        script, cfg, "ar", 0, simulated_buttons=False, pace_hook=realtime_pacer(25.0)
    )
    server = SessionServer("127.0.0.1", 0)
    server.attach_engine(engine)
    server.start()
    thread = threading.Thread(target=engine.run, daemon=True)
    thread.start()
    yield server, engine
    engine.stop_requested = True
    thread.join(timeout=5)
    server.stop()


class TcpDriver:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        self.reader = FrameReader()
        self.inbox = []

    def send(self, msg):
        payload = json.dumps({"v": 1, **msg}).encode()
        self.sock.sendall(struct.pack(">I", len(payload)) + payload)

    def drain(self, wait=0.05):
        self.sock.settimeout(wait)
        try:
            data = self.sock.recv(1 << 20)
            if data:
                for p in self.reader.feed(data):
                    self.inbox.append(json.loads(p))
        except socket.timeout:
            pass
        return self.inbox

    def wait_for(self, pred, timeout=20.0):
        end = time.time() + timeout
        while time.time() < end:
            for m in self.inbox:
                if pred(m):
                    return m
            self.inbox.clear()
            self.drain(wait=max(0.05, min(1.0, end - time.time())))
        raise TimeoutError("expected message did not arrive")

    def buttons(self, action):
        self.send({"type": "button", "button": "ENABLE", "edge": "press", "time": 0})
        self.send({"type": "button", "button": action, "edge": "press", "time": 0})
        self.send({"type": "button", "button": "ENABLE", "edge": "release", "time": 0})

    def close(self):
        self.sock.close()


def test_live_session_full_interaction(live_session):
    server, engine = live_session
    op = TcpDriver(server.port)
    op.send({"type": "hello", "role": "operator", "client": "op"})
    hello = op.wait_for(lambda m: m["type"] == "hello")
    assert hello["role_granted"] == "operator"
    assert hello["width"] == 128 and hello["height"] == 106

    # observers cannot press buttons
    obs = TcpDriver(server.port)
    obs.send({"type": "hello", "role": "operator", "client": "late"})
    granted = obs.wait_for(lambda m: m["type"] == "hello")
    assert granted["role_granted"] == "observer"
    obs.send({"type": "button", "button": "GO", "edge": "press", "time": 0})
    err = obs.wait_for(lambda m: m["type"] == "error")
    assert "operator role" in err["message"]

    # unknown types are answered, never dropped
    op.send({"type": "metrics"})
    err = op.wait_for(lambda m: m["type"] == "error")
    assert "unexpected" in err["message"]

    op.wait_for(lambda m: m["type"] == "snapshot" and m["phase"] == "idle")
    op.buttons("GO")
    op.wait_for(lambda m: m["type"] == "snapshot" and m["phase"] == "running")

    # drive the session like an operator until the scenario finishes:
    # GO after halts (once the reach has cleared), CONFIRM when blocked;
    # always act on the newest snapshot, stale ones are irrelevant
    deadline = time.time() + 60
    metrics = None
    last_action = 0.0
    while time.time() < deadline and metrics is None:
        op.drain(wait=0.1)
        snaps = [m for m in op.inbox if m["type"] == "snapshot"]
        for m in op.inbox:
            if m["type"] == "metrics":
                metrics = m
        op.inbox.clear()
        if metrics is not None:
            break
        if not snaps:
            continue
        latest = snaps[-1]
        if latest["phase"] == "halted" and time.time() - last_action > 0.5:
            op.buttons("GO")
            last_action = time.time()
        elif latest["phase"] == "awaiting_confirmation" and time.time() - last_action > 0.5:
            op.buttons("CONFIRM")
            last_action = time.time()
    assert metrics is not None, "scenario should finish under operator control"
    assert metrics["halts"] >= 1
    assert metrics["confirmations"] >= 1
    op.close()
    obs.close()


def test_live_session_websocket_transport(live_session):
    server, engine = live_session
    sock = socket.create_connection(("127.0.0.1", server.port), timeout=10)
    key = base64.b64encode(b"0123456789abcdef").decode()
    sock.sendall(
        (
            f"GET /console HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
            f"Connection: Upgrade\r\nSec-WebSocket-Key: {key}\r\n"
            f"Sec-WebSocket-Version: 13\r\n\r\n"
        ).encode()
    )
    head = b""
    while b"\r\n\r\n" not in head:
        head += sock.recv(4096)
    head, _, rest = head.partition(b"\r\n\r\n")
    expect = websocket_accept_key(key).encode()
    assert expect in head

    reader = WSFrameReader()
    events = list(reader.feed(rest)) if rest else []

    hello = _masked_text_frame(
        json.dumps({"v": 1, "type": "hello", "role": "observer", "client": "ws"}).encode()
    )
    sock.sendall(hello)
    got_hello = None
    end = time.time() + 15
    while time.time() < end and got_hello is None:
        data = sock.recv(65536)
        if not data:
            break
        for kind, payload in reader.feed(data):
            if kind != "text":
                continue
            msg = json.loads(payload)
            if msg["type"] == "hello":
                got_hello = msg
            events.append((kind, payload))
    assert got_hello is not None and got_hello["role_granted"] == "observer"
    sock.close()
