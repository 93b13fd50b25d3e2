import json
import socket
import threading
import time

import numpy as np
import pytest

from mhc import wire
from mhc.convert import convert_modality
from mhc.data import make_clip
from mhc.errors import ProtocolError, SchemaError
from mhc.evaluation import ZeroController
from mhc.motion import sim13_skeleton
from mhc.server import SessionConfig, SteeringSession, serve_session
from mhc import directives as dv


@pytest.fixture(scope="module")
def skel():
    return sim13_skeleton()


# --- wire ----------------------------------------------------------------------


def test_wire_roundtrip():
    out = wire.Outbox(clock=lambda: 12345)
    msg = out.make("directive_update", {"joystick": {"speed": 1.0, "heading": 0.5, "height": 0.85}})
    back = wire.decode_line(wire.encode(msg))
    assert back.kind == msg.kind
    assert back.seq == msg.seq == 1
    assert back.timestamp_ms == 12345
    assert back.body == msg.body


def test_wire_ignores_unknown_fields():
    doc = {"schema": "mhc-wire/1", "kind": "bye", "seq": 3, "t_ms": 1, "mystery": [1, 2]}
    msg = wire.decode_line(json.dumps(doc))
    assert msg.kind == "bye"
    assert msg.body["mystery"] == [1, 2]


def test_wire_rejects_malformed():
    with pytest.raises(ProtocolError):
        wire.decode_line("not json at all {")
    with pytest.raises(ProtocolError):
        wire.decode_line(json.dumps({"kind": "nope", "seq": 1, "t_ms": 0}))
    with pytest.raises(ProtocolError):
        wire.decode_line(json.dumps({"kind": "bye"}))


def test_sequence_checker():
    chk = wire.SequenceChecker()
    chk.check(wire.WireMessage("bye", 1, 0))
    chk.check(wire.WireMessage("bye", 5, 0))
    with pytest.raises(ProtocolError):
        chk.check(wire.WireMessage("bye", 5, 0))


# --- session -----------------------------------------------------------------------


def test_session_tick_and_directive_swap(skel):
    session = SteeringSession(ZeroController(), skel, SessionConfig())
    body = session.tick()
    assert body["tick"] == 1
    assert not body["fallen"]
    assert set(body["reward"]) >= {"r_h", "r_tr", "r_st", "total"}
    session.apply_directive_update({"joystick": {"speed": 1.0, "heading": 0.0, "height": 0.5}})
    d = session.current_directive()
    assert d.track.lin_vel[0, 0] == pytest.approx(1.0)
    with pytest.raises(ProtocolError):
        session.apply_directive_update({"nope": 1})
    with pytest.raises(ProtocolError):
        session.apply_directive_update({"joystick": {"speed": "fast"}})


def _start_server(skel, **kw):
    stop = threading.Event()
    ready = threading.Event()
    port_box: list = []
    thread = threading.Thread(
        target=serve_session,
        kwargs=dict(
            controller=ZeroController(),
            skel=skel,
            cfg=SessionConfig(),
            port=0,
            realtime=False,
            stop_event=stop,
            ready_event=ready,
            bound_port=port_box,
            **kw,
        ),
        daemon=True,
    )
    thread.start()
    assert ready.wait(5.0)
    return stop, thread, port_box[0]


def _recv_messages(sock, n, timeout=10.0):
    sock.settimeout(timeout)
    buf = b""
    msgs = []
    while len(msgs) < n:
        chunk = sock.recv(65536)
        if not chunk:
            break
        buf += chunk
        while b"\n" in buf and len(msgs) < n:
            line, buf = buf.split(b"\n", 1)
            if line.strip():
                msgs.append(wire.decode_line(line))
    return msgs


def test_server_streams_and_holds_directive(skel):
    stop, thread, port = _start_server(skel, max_ticks=200)
    try:
        sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        msgs = _recv_messages(sock, 1)
        assert msgs[0].kind == "hello"
        assert msgs[0].body["skeleton"] == "sim13"
        out = wire.Outbox()
        sock.sendall(
            wire.encode(
                out.make(
                    "directive_update",
                    {"joystick": {"speed": 0.0, "heading": 0.0, "facing": 0.0, "height": 0.9}},
                )
            )
        )
        msgs = _recv_messages(sock, 120)
        frames = [m for m in msgs if m.kind == "state_frame"]
        metrics = [m for m in msgs if m.kind == "metrics_frame"]
        assert frames and metrics
        # sequence numbers strictly increase
        seqs = [m.seq for m in msgs]
        assert all(b > a for a, b in zip(seqs, seqs[1:]))
        # zero-speed directive: streamed root speed converges below 0.1 m/s
        late = frames[-10:]
        for f in late:
            vel = np.array(f.body["pose"]["root"]["lin_vel"])
            assert np.linalg.norm(vel[:2]) < 0.1
        sock.close()
    finally:
        stop.set()
        thread.join(timeout=5)


def test_server_error_on_malformed_line(skel):
    stop, thread, port = _start_server(skel)
    try:
        sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        _recv_messages(sock, 3)
        sock.sendall(b"this is not json\n")
        # drain until the error message arrives, then the socket closes
        sock.settimeout(5.0)
        buf = b""
        got_error = False
        try:
            while True:
                chunk = sock.recv(65536)
                if not chunk:
                    break
                buf += chunk
                for line in buf.split(b"\n"):
                    if line.strip() and b'"error"' in line:
                        got_error = True
        except socket.timeout:
            pass
        assert got_error
        sock.close()
    finally:
        stop.set()
        thread.join(timeout=5)


def test_server_survives_reconnect(skel):
    stop, thread, port = _start_server(skel)
    try:
        s1 = socket.create_connection(("127.0.0.1", port), timeout=5)
        first = _recv_messages(s1, 5)
        tick1 = max(m.body.get("tick", 0) for m in first if m.kind == "state_frame")
        s1.close()
        time.sleep(0.1)
        s2 = socket.create_connection(("127.0.0.1", port), timeout=5)
        second = _recv_messages(s2, 5)
        tick2 = max(m.body.get("tick", 0) for m in second if m.kind == "state_frame")
        assert tick2 > tick1  # session state persisted across clients
        s2.close()
    finally:
        stop.set()
        thread.join(timeout=5)


# --- converters ---------------------------------------------------------------------


def test_convert_full_clip(tmp_path, skel):
    clip = make_clip(skel, "walk", length=30)
    path = tmp_path / "clip.json"
    clip.save(path)
    d = convert_modality(path, skel)
    assert d.mask.channels == {dv.R, dv.THETA, dv.L}
    assert d.mask.joint_mask.all()
    assert len(d) == 30


def test_convert_keypoints_with_occlusion(tmp_path, skel):
    clip = make_clip(skel, "walk", length=20)
    names = ["head", "right_hand", "left_hand", "right_foot", "left_foot"]
    idx = [list(skel.joint_names).index(n) for n in names]
    doc = {
        "schema": "mhc-keypoints/1",
        "fps": 30,
        "joint_names": names,
        "frames": clip.joint_global[:, idx].tolist(),
    }
    path = tmp_path / "kp.json"
    path.write_text(json.dumps(doc))
    d = convert_modality(path, skel)
    assert d.mask.channels == {dv.G}
    assert int(d.mask.joint_mask.sum()) == 5
    np.testing.assert_allclose(
        d.track.joint_global[:, idx], clip.joint_global[:, idx], atol=1e-12
    )
    # occlusion spec narrows the selection further
    d2 = convert_modality(path, skel, occlusion=["head", "right_hand"])
    assert int(d2.mask.joint_mask.sum()) == 2


def test_convert_rootcmd(tmp_path, skel):
    rows = [{"speed": 2.0, "heading": np.pi / 2, "height": 0.6} for _ in range(5)]
    path = tmp_path / "cmd.json"
    path.write_text(json.dumps({"schema": "mhc-rootcmd/1", "rows": rows}))
    d = convert_modality(path, skel)
    assert d.mask.channels == {dv.R}
    assert d.mask.root_fields == set(dv.ROOT_FIELDS)
    assert len(d) == 5
    np.testing.assert_allclose(d.track.lin_vel[0], [0.0, 2.0, 0.0], atol=1e-12)
    assert d.track.root_pos[0, 2] == 0.6


def test_convert_rejects_bad_schema(tmp_path, skel):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema": "unknown/1"}))
    with pytest.raises(SchemaError):
        convert_modality(path, skel)
    path.write_text("{broken")
    with pytest.raises(SchemaError):
        convert_modality(path, skel)


def test_converted_directives_validate(tmp_path, skel):
    # converter outputs always satisfy directive invariants and round-trip
    clip = make_clip(skel, "idle", length=10)
    path = tmp_path / "clip.json"
    clip.save(path)
    d = convert_modality(path, skel)
    out = tmp_path / "d.json"
    dv.save_directive(d, out)
    loaded = dv.load_directive(out, skel.joint_count)
    assert loaded.mask.channels == d.mask.channels
