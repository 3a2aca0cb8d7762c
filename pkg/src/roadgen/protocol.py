"""Wire protocol and headless scene server.

Every message is a single-line UTF-8 JSON object whose "type" field names
the variant (hello, tile, spawn, clear, commit, ack). On stream transport
(TCP) messages are newline-delimited; on datagram transport (UDP) each
datagram carries exactly one object and the newline is omitted. The server
holds one scene session at a time: Hello opens (and implicitly clears) a
session, Tile/Spawn populate it, Commit validates an optional tile-count
checksum, atomically writes the scene dump, and is acknowledged; protocol
violations are answered with error acks and leave state unchanged. See
PROTOCOL.md for the full message reference.
"""

from __future__ import annotations

import json
import math
import socket
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ioutil import atomic_write_text
from .tiles import EMPTY, TileGrid

__all__ = [
    "PROTOCOL_VERSION",
    "DEFAULT_PORT",
    "Hello",
    "Tile",
    "Spawn",
    "Clear",
    "Commit",
    "Ack",
    "MalformedFrame",
    "UnknownType",
    "FieldOutOfRange",
    "NackReceived",
    "encode",
    "decode",
    "SceneSession",
    "SceneServer",
    "send_scene",
    "serve",
]

PROTOCOL_VERSION = 1
DEFAULT_PORT = 7777
TRANSPORTS = ("stream", "datagram")


class MalformedFrame(ValueError):
    pass


class UnknownType(ValueError):
    pass


class FieldOutOfRange(ValueError):
    pass


class NackReceived(RuntimeError):
    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


@dataclass(frozen=True)
class Hello:
    grid_width: int
    grid_height: int
    tile_size: float = 1.0
    protocol_version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class Tile:
    x: int
    y: int
    code: int


@dataclass(frozen=True)
class Spawn:
    kind: str
    x: float
    y: float
    heading: float


@dataclass(frozen=True)
class Clear:
    pass


@dataclass(frozen=True)
class Commit:
    scene_id: str
    tile_count: int | None = None


@dataclass(frozen=True)
class Ack:
    status: str
    detail: str = ""


def _require_int(obj: dict, key: str) -> int:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise FieldOutOfRange(f"field {key!r} must be an integer")
    return v


def _require_real(obj: dict, key: str) -> float:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise FieldOutOfRange(f"field {key!r} must be a finite number")
    return float(v)


def _require_str(obj: dict, key: str) -> str:
    v = obj.get(key)
    if not isinstance(v, str):
        raise FieldOutOfRange(f"field {key!r} must be a string")
    return v


def validate(msg) -> None:
    """Invariant checks shared by encoder and decoder."""
    if isinstance(msg, Hello):
        if msg.protocol_version < 1:
            raise FieldOutOfRange("protocol_version must be >= 1")
        if msg.grid_width < 1 or msg.grid_height < 1:
            raise FieldOutOfRange("grid dimensions must be positive")
        if not (isinstance(msg.tile_size, (int, float)) and math.isfinite(msg.tile_size)
                and msg.tile_size > 0):
            raise FieldOutOfRange("tile_size must be a positive real")
    elif isinstance(msg, Tile):
        if msg.x < 0 or msg.y < 0:
            raise FieldOutOfRange("tile indices must be nonnegative")
        if not (0 <= msg.code <= 15):
            raise FieldOutOfRange("tile code must lie in [0, 15]")
    elif isinstance(msg, Spawn):
        if not msg.kind:
            raise FieldOutOfRange("spawn kind must be nonempty")
        for v in (msg.x, msg.y, msg.heading):
            if not math.isfinite(v):
                raise FieldOutOfRange("spawn coordinates must be finite")
    elif isinstance(msg, Commit):
        if not msg.scene_id:
            raise FieldOutOfRange("scene_id must be nonempty")
        if msg.tile_count is not None and msg.tile_count < 0:
            raise FieldOutOfRange("tile_count must be >= 0")
    elif isinstance(msg, Ack):
        if msg.status not in ("ok", "error"):
            raise FieldOutOfRange("ack status must be 'ok' or 'error'")
    elif isinstance(msg, Clear):
        pass
    else:
        raise TypeError(f"not a scene message: {msg!r}")


def encode(msg, newline: bool = True) -> bytes:
    """Single-line JSON encoding; validation precedes encoding."""
    validate(msg)
    if isinstance(msg, Hello):
        obj = {"type": "hello", "protocol_version": msg.protocol_version,
               "grid_width": msg.grid_width, "grid_height": msg.grid_height,
               "tile_size": msg.tile_size}
    elif isinstance(msg, Tile):
        obj = {"type": "tile", "x": msg.x, "y": msg.y, "code": msg.code}
    elif isinstance(msg, Spawn):
        obj = {"type": "spawn", "kind": msg.kind, "x": msg.x, "y": msg.y,
               "heading": msg.heading}
    elif isinstance(msg, Clear):
        obj = {"type": "clear"}
    elif isinstance(msg, Commit):
        obj = {"type": "commit", "scene_id": msg.scene_id}
        if msg.tile_count is not None:
            obj["tile_count"] = msg.tile_count
    else:
        obj = {"type": "ack", "status": msg.status, "detail": msg.detail}
    line = json.dumps(obj, separators=(",", ":"))
    return line.encode("utf-8") + (b"\n" if newline else b"")


_KNOWN_FIELDS = {
    "hello": {"protocol_version", "grid_width", "grid_height", "tile_size"},
    "tile": {"x", "y", "code"},
    "spawn": {"kind", "x", "y", "heading"},
    "clear": set(),
    "commit": {"scene_id", "tile_count"},
    "ack": {"status", "detail"},
}


def decode(data: bytes):
    """Parse one framed message with strict field checking."""
    try:
        text = data.decode("utf-8").strip()
    except UnicodeDecodeError as exc:
        raise MalformedFrame(f"frame is not UTF-8: {exc}") from None
    if not text:
        raise MalformedFrame("empty frame")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"frame is not JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedFrame("frame must be a JSON object")
    mtype = obj.get("type")
    if not isinstance(mtype, str):
        raise MalformedFrame("missing 'type' field")
    if mtype not in _KNOWN_FIELDS:
        raise UnknownType(f"unknown message type {mtype!r}")
    extra = set(obj) - _KNOWN_FIELDS[mtype] - {"type"}
    if extra:
        raise FieldOutOfRange(f"unexpected fields {sorted(extra)} for {mtype!r}")

    if mtype == "hello":
        msg = Hello(grid_width=_require_int(obj, "grid_width"),
                    grid_height=_require_int(obj, "grid_height"),
                    tile_size=_require_real(obj, "tile_size") if "tile_size" in obj else 1.0,
                    protocol_version=_require_int(obj, "protocol_version"))
    elif mtype == "tile":
        msg = Tile(x=_require_int(obj, "x"), y=_require_int(obj, "y"),
                   code=_require_int(obj, "code"))
    elif mtype == "spawn":
        msg = Spawn(kind=_require_str(obj, "kind"), x=_require_real(obj, "x"),
                    y=_require_real(obj, "y"), heading=_require_real(obj, "heading"))
    elif mtype == "clear":
        msg = Clear()
    elif mtype == "commit":
        tc = _require_int(obj, "tile_count") if "tile_count" in obj else None
        msg = Commit(scene_id=_require_str(obj, "scene_id"), tile_count=tc)
    else:
        msg = Ack(status=_require_str(obj, "status"),
                  detail=_require_str(obj, "detail") if "detail" in obj else "")
        if msg.status not in ("ok", "error"):
            raise FieldOutOfRange("ack status must be 'ok' or 'error'")
    validate(msg)
    return msg


# ---------------------------------------------------------------------------
# server

class SceneSession:
    """Sequential scene state machine; returns an Ack for Commit and for
    every rejected message, None for silently accepted ones."""

    def __init__(self, dump_path):
        self.dump_path = Path(dump_path)
        self._reset()

    def _reset(self):
        self.grid_cells = None
        self.tile_size = 1.0
        self.agents: list[Spawn] = []
        self.committed = False
        self.scene_id: str | None = None
        self.tiles_received = 0

    def apply(self, msg) -> Ack | None:
        if isinstance(msg, Hello):
            if msg.protocol_version != PROTOCOL_VERSION:
                return Ack("error", f"unsupported protocol version {msg.protocol_version}")
            self._reset()
            self.grid_cells = np.full((msg.grid_height, msg.grid_width), EMPTY, dtype=np.int16)
            self.tile_size = msg.tile_size
            return None
        if isinstance(msg, Clear):
            self._reset()
            return None
        if isinstance(msg, Tile):
            if self.grid_cells is None:
                return Ack("error", "no session")
            if self.committed:
                return Ack("error", "scene committed")
            h, w = self.grid_cells.shape
            if msg.x >= w or msg.y >= h:
                return Ack("error", f"tile ({msg.x}, {msg.y}) outside {w}x{h} grid")
            self.grid_cells[msg.y, msg.x] = msg.code
            self.tiles_received += 1
            return None
        if isinstance(msg, Spawn):
            if self.grid_cells is None:
                return Ack("error", "no session")
            if self.committed:
                return Ack("error", "scene committed")
            self.agents.append(msg)
            return None
        if isinstance(msg, Commit):
            if self.grid_cells is None:
                return Ack("error", "no session")
            if self.committed and msg.scene_id != self.scene_id:
                return Ack("error", "scene committed")
            if msg.tile_count is not None and msg.tile_count != self.tiles_received:
                return Ack("error", "tile count mismatch")
            self._write_dump()
            self.committed = True
            self.scene_id = msg.scene_id
            return Ack("ok", f"committed scene {msg.scene_id!r}: {self.tiles_received} tiles")
        if isinstance(msg, Ack):
            return Ack("error", "server does not accept acks")
        return Ack("error", f"unhandled message {type(msg).__name__}")

    def _write_dump(self):
        h, w = self.grid_cells.shape
        dump = {
            "width": w,
            "height": h,
            "cells": self.grid_cells.ravel().tolist(),
            "agents": [{"kind": a.kind, "x": a.x, "y": a.y, "heading": a.heading}
                       for a in self.agents],
        }
        atomic_write_text(self.dump_path, json.dumps(dump))


class SceneServer:
    """Headless scene receiver over stream (TCP) or datagram (UDP) transport.

    Messages are applied strictly in arrival order; malformed frames are
    answered with error acks and never crash the server.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 transport: str = "stream", dump_path="scene_dump.json"):
        if transport not in TRANSPORTS:
            raise ValueError(f"transport must be one of {TRANSPORTS}")
        self.host = host
        self.port = port
        self.transport = transport
        self.session = SceneSession(dump_path)
        self._sock: socket.socket | None = None
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()

    @property
    def address(self) -> tuple[str, int]:
        if self._sock is None:
            raise RuntimeError("server not started")
        return self._sock.getsockname()[:2]

    def bind(self):
        kind = socket.SOCK_STREAM if self.transport == "stream" else socket.SOCK_DGRAM
        sock = socket.socket(socket.AF_INET, kind)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((self.host, self.port))
        if self.transport == "stream":
            sock.listen(8)
        sock.settimeout(0.2)
        self._sock = sock

    def _handle_frame(self, frame: bytes) -> Ack | None:
        try:
            msg = decode(frame)
        except (MalformedFrame, UnknownType, FieldOutOfRange) as exc:
            return Ack("error", str(exc))
        try:
            return self.session.apply(msg)
        except Exception as exc:  # contract: never crash on hostile input
            return Ack("error", f"internal error: {exc}")

    def _run_stream(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            with conn:
                conn.settimeout(0.2)
                buf = b""
                while not self._stop.is_set():
                    try:
                        chunk = conn.recv(65536)
                    except socket.timeout:
                        continue
                    except OSError:
                        break
                    if not chunk:
                        break
                    buf += chunk
                    while b"\n" in buf:
                        line, buf = buf.split(b"\n", 1)
                        ack = self._handle_frame(line)
                        if ack is not None:
                            try:
                                conn.sendall(encode(ack))
                            except OSError:
                                break

    def _run_datagram(self):
        while not self._stop.is_set():
            try:
                frame, addr = self._sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                break
            ack = self._handle_frame(frame)
            if ack is not None:
                try:
                    self._sock.sendto(encode(ack, newline=False), addr)
                except OSError:
                    pass

    def serve_forever(self):
        """Blocking receive loop; returns after stop() is called."""
        if self._sock is None:
            self.bind()
        if self.transport == "stream":
            self._run_stream()
        else:
            self._run_datagram()

    def start(self) -> "SceneServer":
        """Run the receive loop on a background thread (for tests/pipelines)."""
        self.bind()
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._stop.set()
        if self._sock is not None:
            self._sock.close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def __enter__(self) -> "SceneServer":
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(listen: tuple[str, int], transport: str, dump_path) -> SceneServer:
    """Blocking server entry point (CLI); runs until interrupted."""
    server = SceneServer(listen[0], listen[1], transport, dump_path)
    server.serve_forever()
    return server


# ---------------------------------------------------------------------------
# sender

def scene_messages(grid: TileGrid, spawns=(), tile_size: float = 1.0,
                   scene_id: str = "scene") -> list:
    """Hello, one Tile per non-EMPTY cell in row-major order, Spawns, Commit."""
    spawns = list(spawns)
    msgs = [Hello(grid_width=grid.width, grid_height=grid.height, tile_size=tile_size)]
    ys, xs = np.nonzero(grid.cells != EMPTY)
    for y, x in zip(ys.tolist(), xs.tolist()):
        msgs.append(Tile(x=x, y=y, code=int(grid.cells[y, x])))
    tile_count = len(msgs) - 1
    msgs.extend(spawns)
    msgs.append(Commit(scene_id=scene_id, tile_count=tile_count))
    return msgs


def send_scene(grid: TileGrid, spawns, endpoint: tuple[str, int],
               transport: str = "stream", tile_size: float = 1.0,
               scene_id: str = "scene", timeout: float = 10.0,
               wait_ack: bool | None = None) -> Ack | None:
    """Stream or fire a scene at a server; returns the commit Ack when waited.

    Stream transport always waits for the final Ack; datagram transport is
    fire-and-forget by default (the Commit checksum lets the server detect
    loss) but can opt into waiting with wait_ack=True.
    """
    if transport not in TRANSPORTS:
        raise ValueError(f"transport must be one of {TRANSPORTS}")
    spawns = list(spawns)
    msgs = scene_messages(grid, spawns, tile_size, scene_id)
    if wait_ack is None:
        wait_ack = transport == "stream"

    if transport == "stream":
        with socket.create_connection(endpoint, timeout=timeout) as sock:
            sock.sendall(b"".join(encode(m) for m in msgs))
            buf = b""
            while True:
                chunk = sock.recv(65536)
                if not chunk:
                    raise ConnectionError("server closed before acknowledging commit")
                buf += chunk
                if b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    ack = decode(line)
                    if not isinstance(ack, Ack):
                        raise MalformedFrame("expected an ack from the server")
                    if ack.status != "ok":
                        raise NackReceived(ack.detail)
                    return ack

    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    try:
        sock.settimeout(timeout)
        for m in msgs:
            sock.sendto(encode(m, newline=False), endpoint)
        if not wait_ack:
            return None
        frame, _ = sock.recvfrom(65536)
        ack = decode(frame)
        if not isinstance(ack, Ack):
            raise MalformedFrame("expected an ack from the server")
        if ack.status != "ok":
            raise NackReceived(ack.detail)
        return ack
    finally:
        sock.close()
