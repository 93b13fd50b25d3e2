"""Live steering session server.

One controller client drives the simulated character over the mhc-wire/1
socket: the most recent directive_update becomes the live directive (held
until replaced) while state and metrics frames stream back at the control
rate (or at full speed with realtime=False).

The wire payload is newline-delimited JSON either way; the optional
WebSocket transport only adds RFC 6455 framing around the same lines so
browsers can connect.

The sim loop and the message reader are the only two activities; they
share exactly one atomically swapped value, the current directive.
"""

from __future__ import annotations

import base64
import errno
import hashlib
import socket
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import directives as dv
from . import wire
from .adversary import WINDOW_LEN, DiscriminatorEnsemble, StyleFeatures, style_reward
from .errors import PortInUse, ProtocolError
from .motion.pose import Pose, rest_pose
from .motion.skeleton import SkeletonSpec
from .planning.actions import joystick_directive
from .rewards import RewardBreakdown, TrackingConfig, energy_cost, tracking_reward
from .simcore.config import SimConfig
from .simcore.engine import BatchSim


@dataclass
class SessionConfig:
    sim: SimConfig = SimConfig()
    tracking: TrackingConfig = TrackingConfig()
    directive_frames: int = 30


class SteeringSession:
    """Sim state + live directive + per-tick reward accounting."""

    def __init__(self, controller, skel: SkeletonSpec, cfg: SessionConfig,
                 ensemble: DiscriminatorEnsemble | None = None, initial_pose: Pose | None = None):
        self.controller = controller
        self.skel = skel
        self.cfg = cfg
        self.ensemble = ensemble
        self.sim = BatchSim(skel, cfg.sim, 1)
        self.sim.reset_env(0, initial_pose or rest_pose(skel))
        self._lock = threading.Lock()
        self._last_facing = 0.0
        self._directive = joystick_directive(
            0.0, 0.0, 0.0, 0.85, skel.joint_count, frames=cfg.directive_frames
        )
        self._directive_age = 0
        self.tick_count = 0
        self.features = StyleFeatures(skel, fps=float(cfg.sim.control_hz)) if ensemble else None
        self._pose = self.sim.poses()[0]
        if self.features:
            rec = self.features.frame_arrays([self._pose], None)
            self._ring = [rec] * WINDOW_LEN

    # -- directive handling -------------------------------------------------

    def apply_directive_update(self, body: dict) -> None:
        joy = body.get("joystick")
        if not isinstance(joy, dict):
            raise ProtocolError("directive_update needs a joystick object")
        try:
            facing = joy.get("facing")
            if facing is None:
                # hold semantics: keep the last commanded facing
                facing = self._last_facing
            else:
                facing = float(facing)
            directive = joystick_directive(
                float(joy["speed"]),
                float(joy["heading"]),
                facing,
                float(joy["height"]),
                self.skel.joint_count,
                frames=self.cfg.directive_frames,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"bad joystick fields: {e}") from e
        with self._lock:
            self._directive = directive
            self._directive_age = 0
            self._last_facing = facing

    def current_directive(self) -> dv.Directive:
        with self._lock:
            return self._directive

    # -- stepping ------------------------------------------------------------

    def tick(self) -> dict:
        directive = self.current_directive()
        pose = self._pose
        action = self.controller.act(pose, directive, min(self._directive_age, len(directive) - 1))
        info = self.sim.step(action[None])[0]
        new_pose = self.sim.poses()[0]
        target = directive.target_pose(self._directive_age + 1)
        r_h, r_o, r_v, r_l = tracking_reward(new_pose, target, directive.mask, self.cfg.tracking)
        if self.ensemble is not None:
            rec = self.features.frame_arrays([new_pose], [pose])
            self._ring = self._ring[1:] + [rec]
            window = self.features.build_windows(
                np.stack([r[0] for r in self._ring], axis=1),
                np.stack([r[1] for r in self._ring], axis=1),
                np.stack([r[2] for r in self._ring], axis=1),
                np.stack([r[3] for r in self._ring], axis=1),
                np.stack([r[4] for r in self._ring], axis=1),
            )
            parts, r_st = style_reward(self.ensemble, window[0])
        else:
            parts, r_st = np.zeros(5), 0.0
        energy = energy_cost(info.action_delta, np.zeros_like(info.action_delta), info.torques, self.cfg.tracking)
        breakdown = RewardBreakdown(r_h=r_h, r_o=r_o, r_v=r_v, r_l=r_l,
                                    style_parts=parts, r_st=float(r_st), energy=energy)
        total = breakdown.total(self.cfg.tracking)
        self._pose = new_pose
        self._directive_age += 1
        self.tick_count += 1
        fallen = bool(self.sim.fallen()[0])
        return wire.state_frame_body(new_pose, fallen, breakdown, total, self.tick_count)


class _TcpLineConn:
    """Plain newline-delimited JSON over the socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    def handshake(self) -> None:
        pass

    def send_line(self, line: bytes) -> None:
        self.sock.sendall(line)

    def iter_lines(self):
        buf = b""
        while True:
            chunk = self.sock.recv(4096)
            if not chunk:
                return
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                if line.strip():
                    yield line

    def close(self) -> None:
        self.sock.close()


_WS_GUID = b"258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class _WsLineConn:
    """The same JSON lines wrapped in WebSocket text frames."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    def handshake(self) -> None:
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ProtocolError("client closed during websocket handshake")
            data += chunk
        key = None
        for line in data.split(b"\r\n"):
            if line.lower().startswith(b"sec-websocket-key:"):
                key = line.split(b":", 1)[1].strip()
        if key is None:
            raise ProtocolError("missing Sec-WebSocket-Key header")
        accept = base64.b64encode(hashlib.sha1(key + _WS_GUID).digest())
        self.sock.sendall(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + accept + b"\r\n\r\n"
        )

    def send_line(self, line: bytes) -> None:
        payload = line.rstrip(b"\n")
        n = len(payload)
        if n < 126:
            header = bytes([0x81, n])
        elif n < 65536:
            header = bytes([0x81, 126]) + n.to_bytes(2, "big")
        else:
            header = bytes([0x81, 127]) + n.to_bytes(8, "big")
        self.sock.sendall(header + payload)

    def _read_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                raise ConnectionError("websocket closed")
            buf += chunk
        return buf

    def iter_lines(self):
        carry = b""
        while True:
            try:
                head = self._read_exact(2)
            except (ConnectionError, OSError):
                return
            opcode = head[0] & 0x0F
            masked = head[1] & 0x80
            length = head[1] & 0x7F
            if length == 126:
                length = int.from_bytes(self._read_exact(2), "big")
            elif length == 127:
                length = int.from_bytes(self._read_exact(8), "big")
            mask = self._read_exact(4) if masked else b"\x00" * 4
            payload = bytearray(self._read_exact(length))
            if masked:
                for i in range(length):
                    payload[i] ^= mask[i % 4]
            if opcode == 0x8:  # close
                return
            if opcode in (0x9,):  # ping -> pong
                self.sock.sendall(bytes([0x8A, 0]))
                continue
            carry += bytes(payload)
            while b"\n" in carry:
                line, carry = carry.split(b"\n", 1)
                if line.strip():
                    yield line
            if carry.strip() and opcode in (0x1, 0x2):
                yield carry.strip()
                carry = b""

    def close(self) -> None:
        try:
            self.sock.sendall(bytes([0x88, 0]))
        except OSError:
            pass
        self.sock.close()


def _bind(host: str, port: int) -> socket.socket:
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
    except OSError as e:
        sock.close()
        if e.errno == errno.EADDRINUSE:
            raise PortInUse(f"port {port} is already in use") from e
        raise
    sock.listen(1)
    return sock


def serve_session(
    controller,
    skel: SkeletonSpec,
    cfg: SessionConfig = SessionConfig(),
    host: str = "127.0.0.1",
    port: int = 7731,
    realtime: bool = True,
    transport: str = "tcp",
    ensemble: DiscriminatorEnsemble | None = None,
    stop_event: threading.Event | None = None,
    max_ticks: int | None = None,
    ready_event: threading.Event | None = None,
    bound_port: list | None = None,
) -> None:
    """Accept one client at a time and stream the session to it.

    A malformed line produces a single error message and closes that
    client; the simulation keeps its state and the last directive across
    reconnects.  transport: "tcp" (raw NDJSON) or "ws" (browser clients).
    """
    session = SteeringSession(controller, skel, cfg, ensemble=ensemble)
    stop = stop_event or threading.Event()
    server_sock = _bind(host, port)
    if bound_port is not None:
        bound_port.append(server_sock.getsockname()[1])
    server_sock.settimeout(0.2)
    if ready_event is not None:
        ready_event.set()
    period = 1.0 / cfg.sim.control_hz
    conn_cls = _WsLineConn if transport == "ws" else _TcpLineConn
    try:
        while not stop.is_set():
            try:
                client, _ = server_sock.accept()
            except socket.timeout:
                continue
            conn = conn_cls(client)
            try:
                conn.handshake()
            except (ProtocolError, OSError):
                conn.close()
                continue
            _serve_client(conn, session, stop, realtime, period, max_ticks)
            if max_ticks is not None and session.tick_count >= max_ticks:
                return
    finally:
        server_sock.close()


def _serve_client(conn, session, stop, realtime, period, max_ticks):
    outbox = wire.Outbox()
    checker = wire.SequenceChecker()
    dead = threading.Event()
    error_msg: list = []

    def reader():
        try:
            for line in conn.iter_lines():
                msg = checker.check(wire.decode_line(line))
                if msg.kind == "directive_update":
                    session.apply_directive_update(msg.body)
                elif msg.kind == "bye":
                    break
                if dead.is_set():
                    break
        except ProtocolError as e:
            error_msg.append(str(e))
        except OSError:
            pass
        dead.set()

    reader_thread = threading.Thread(target=reader, daemon=True)
    reader_thread.start()

    try:
        conn.send_line(
            wire.encode(
                outbox.make(
                    "hello",
                    {
                        "skeleton": session.skel.name,
                        "joint_names": list(session.skel.joint_names),
                        "parents": session.skel.parents.tolist(),
                        "control_hz": session.cfg.sim.control_hz,
                    },
                )
            )
        )
        next_tick = time.monotonic()
        while not stop.is_set() and not dead.is_set():
            if max_ticks is not None and session.tick_count >= max_ticks:
                break
            body = session.tick()
            conn.send_line(wire.encode(outbox.make("state_frame", body)))
            conn.send_line(
                wire.encode(
                    outbox.make(
                        "metrics_frame",
                        {
                            "tick": session.tick_count,
                            "r_tr": body["reward"]["r_tr"],
                            "r_st": body["reward"]["r_st"],
                            "total": body["reward"]["total"],
                        },
                    )
                )
            )
            if realtime:
                next_tick += period
                delay = next_tick - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
        if error_msg:
            conn.send_line(wire.encode(outbox.make("error", {"message": error_msg[0]})))
        else:
            conn.send_line(wire.encode(outbox.make("bye", {})))
    except OSError:
        pass
    finally:
        dead.set()
        conn.close()
        reader_thread.join(timeout=1.0)
