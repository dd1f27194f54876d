"""Live steering endpoint for the simulation session.

One TCP listener serves two transports carrying the same newline-delimited
JSON message format: plain stream clients, and browser WebSocket clients
(detected by an HTTP GET upgrade on the first line; one JSON message per
text frame). Inbound messages are `{"type":"input","source":...,"line":...}`;
outbound are the session header on connect, telemetry frames at the
telemetry rate, per-input parse echoes, and structured error replies.

All inbound events funnel through one queue into the simulation loop, which
stamps them with the next tick in arrival order; that stamping is the single
nondeterminism boundary, everything after it is deterministic and recorded.
The loop alone owns the session state; client I/O threads only enqueue
inputs and transmit broadcast lines.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import queue
import socket
import struct
import threading
import time
from pathlib import Path

from .command import InputSource, UnknownPhrase
from .service import Session, SessionConfig, SessionLog

logger = logging.getLogger(__name__)

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def error_line(code: str, detail: str) -> str:
    return json.dumps({"type": "error", "code": code, "detail": detail},
                      separators=(",", ":"))


def echo_line(line: str, token: str) -> str:
    return json.dumps({"type": "echo", "line": line, "token": token},
                      separators=(",", ":"))


class _Client:
    """One connected peer; `send_line` hides the transport framing."""

    def __init__(self, sock: socket.socket, peer: str):
        self.sock = sock
        self.peer = peer
        self.reader = sock.makefile("rb")
        self.websocket = False
        self._send_lock = threading.Lock()
        self.alive = True

    def send_line(self, line: str) -> None:
        data = line.encode("utf-8")
        if self.websocket:
            header = b"\x81"  # FIN + text
            n = len(data)
            if n < 126:
                header += struct.pack("!B", n)
            elif n < 1 << 16:
                header += struct.pack("!BH", 126, n)
            else:
                header += struct.pack("!BQ", 127, n)
            payload = header + data
        else:
            payload = data + b"\n"
        with self._send_lock:
            self.sock.sendall(payload)

    def close(self) -> None:
        self.alive = False
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass

    # -- websocket plumbing ------------------------------------------------

    def ws_handshake(self, request_line: bytes) -> bool:
        headers: dict[str, str] = {}
        while True:
            raw = self.reader.readline()
            if not raw:
                return False
            line = raw.decode("latin-1").rstrip("\r\n")
            if not line:
                break
            if ":" in line:
                name, value = line.split(":", 1)
                headers[name.strip().lower()] = value.strip()
        key = headers.get("sec-websocket-key")
        if key is None or "websocket" not in headers.get("upgrade", "").lower():
            return False
        accept = base64.b64encode(
            hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()).decode("ascii")
        response = ("HTTP/1.1 101 Switching Protocols\r\n"
                    "Upgrade: websocket\r\n"
                    "Connection: Upgrade\r\n"
                    f"Sec-WebSocket-Accept: {accept}\r\n\r\n")
        with self._send_lock:
            self.sock.sendall(response.encode("ascii"))
        self.websocket = True
        return True

    def _read_exact(self, n: int) -> bytes | None:
        data = self.reader.read(n)
        if data is None or len(data) != n:
            return None
        return data

    def read_ws_message(self) -> str | None:
        """Next complete text message, handling fragmentation/ping/close."""
        message = b""
        while True:
            head = self._read_exact(2)
            if head is None:
                return None
            fin = bool(head[0] & 0x80)
            opcode = head[0] & 0x0F
            masked = bool(head[1] & 0x80)
            length = head[1] & 0x7F
            if length == 126:
                ext = self._read_exact(2)
                if ext is None:
                    return None
                length = struct.unpack("!H", ext)[0]
            elif length == 127:
                ext = self._read_exact(8)
                if ext is None:
                    return None
                length = struct.unpack("!Q", ext)[0]
            mask = b""
            if masked:
                mask = self._read_exact(4) or b""
                if len(mask) != 4:
                    return None
            payload = self._read_exact(length) if length else b""
            if payload is None:
                return None
            if masked:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                return None
            if opcode == 0x9:  # ping -> pong
                with self._send_lock:
                    self.sock.sendall(b"\x8a" + struct.pack("!B", len(payload)) + payload)
                continue
            if opcode in (0x1, 0x0):
                message += payload
                if fin:
                    return message.decode("utf-8", errors="replace")
                continue
            # binary and reserved opcodes are ignored
            if fin:
                message = b""


class SessionServer:
    """Runs one shared Session behind a listening socket."""

    def __init__(self, config: SessionConfig | None = None,
                 host: str = "127.0.0.1", port: int = 0,
                 record_path: str | Path | None = None):
        self.session = Session(config if config is not None else SessionConfig())
        self.record_path = record_path
        self._inputs: queue.Queue[tuple[_Client, InputSource, str]] = queue.Queue()
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._running = False
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._accept_thread: threading.Thread | None = None
        self._loop_thread: threading.Thread | None = None
        self._log: SessionLog | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()

    def start(self) -> None:
        self._running = True
        self._listener.listen(8)
        self._listener.settimeout(0.2)
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               name="steer-accept", daemon=True)
        self._loop_thread = threading.Thread(target=self._sim_loop,
                                             name="steer-sim", daemon=True)
        self._accept_thread.start()
        self._loop_thread.start()

    def stop(self) -> SessionLog:
        """Stop serving, close all peers, and return the recorded log."""
        self._running = False
        if self._accept_thread:
            self._accept_thread.join(timeout=2.0)
        if self._loop_thread:
            self._loop_thread.join(timeout=2.0)
        try:
            self._listener.close()
        except OSError:
            pass
        with self._clients_lock:
            for client in self._clients:
                client.close()
            self._clients.clear()
        if self._log is None:
            self._log = self.session.finalize()
        if self.record_path is not None:
            self._log.save(self.record_path)
        return self._log

    # -- accept / client threads --------------------------------------------

    def _accept_loop(self) -> None:
        while self._running:
            try:
                sock, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            client = _Client(sock, f"{addr[0]}:{addr[1]}")
            threading.Thread(target=self._client_main, args=(client,),
                             name=f"steer-client-{client.peer}", daemon=True).start()

    @staticmethod
    def _probe_transport(sock: socket.socket, window_s: float = 0.35) -> bytes:
        """Peek the first bytes without consuming them; empty means the peer
        has sent nothing yet (a plain-stream listener)."""
        deadline = time.monotonic() + window_s
        data = b""
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                sock.settimeout(remaining)
                data = sock.recv(16, socket.MSG_PEEK)
            except socket.timeout:
                break
            except OSError:
                break
            if not data or len(data) >= 4 or not b"GET ".startswith(data):
                break
        sock.settimeout(None)
        return data

    def _client_main(self, client: _Client) -> None:
        try:
            probe = self._probe_transport(client.sock)
            if probe.startswith(b"GET "):
                request_line = client.reader.readline()
                if not client.ws_handshake(request_line):
                    client.close()
                    return
            with self._clients_lock:
                client.send_line(self.session.config.header_line(
                    ticks=self.session.tick_count))
                self._clients.append(client)
            while self._running and client.alive:
                if client.websocket:
                    message = client.read_ws_message()
                    if message is None:
                        break
                else:
                    raw = client.reader.readline()
                    if not raw:
                        break
                    message = raw.decode("utf-8", errors="replace")
                self._handle_message(client, message)
        except OSError as exc:
            logger.debug("client %s dropped: %s", client.peer, exc)
        finally:
            self._drop(client)

    def _handle_message(self, client: _Client, message: str) -> None:
        message = message.strip()
        if not message:
            return
        try:
            obj = json.loads(message)
            if not isinstance(obj, dict):
                raise ValueError("not an object")
            if obj.get("type") != "input":
                raise ValueError(f"unsupported type {obj.get('type')!r}")
            source = InputSource(obj["source"])
            line = obj["line"]
            if not isinstance(line, str):
                raise ValueError("line must be a string")
        except (ValueError, KeyError, TypeError) as exc:
            self._send_safe(client, error_line("BadMessage", str(exc)))
            return
        self._inputs.put((client, source, line))

    def _send_safe(self, client: _Client, line: str) -> None:
        try:
            client.send_line(line)
        except OSError:
            self._drop(client)

    def _drop(self, client: _Client) -> None:
        client.close()
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)

    # -- simulation loop ------------------------------------------------------

    def _broadcast(self, line: str) -> None:
        with self._clients_lock:
            peers = list(self._clients)
        for client in peers:
            self._send_safe(client, line)

    def _sim_loop(self) -> None:
        dt_s = self.session.config.dt_ms / 1000.0
        deadline = time.monotonic()
        while self._running:
            while True:
                try:
                    client, source, line = self._inputs.get_nowait()
                except queue.Empty:
                    break
                result = self.session.submit(
                    source, line,
                    on_reject=lambda code, detail, c=client:
                        self._send_safe(c, error_line(code, detail)))
                if isinstance(result, UnknownPhrase):
                    self._send_safe(client, error_line("UnknownPhrase", result.text))
                else:
                    self._send_safe(client, echo_line(line, result.value))
            for frame_line in self.session.step():
                self._broadcast(frame_line)
            deadline += dt_s
            delay = deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        self._log = self.session.finalize()


def serve(config: SessionConfig | None = None, host: str = "127.0.0.1",
          port: int = 0, record_path: str | Path | None = None) -> SessionServer:
    """Start a live session server; caller stops it (CLI runs until Ctrl-C)."""
    server = SessionServer(config, host=host, port=port, record_path=record_path)
    server.start()
    return server
