"""Record a short steering-session wire log for the replay tests.

Produces test/fixtures/session.ndjson: a deterministic hello + 90 ticks of
state/metrics frames with a couple of directive swaps, exactly as the
server would stream them (fixed clock, so reruns are byte-identical).
"""

from pathlib import Path

from mhc import wire
from mhc.evaluation import ZeroController
from mhc.motion import sim13_skeleton
from mhc.server import SessionConfig, SteeringSession

OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures" / "session.ndjson"


def main() -> None:
    skel = sim13_skeleton()
    session = SteeringSession(ZeroController(), skel, SessionConfig())
    clock_ms = [0]

    def clock():
        clock_ms[0] += 33
        return clock_ms[0]

    outbox = wire.Outbox(clock=clock)
    lines = [
        wire.encode(
            outbox.make(
                "hello",
                {
                    "skeleton": skel.name,
                    "joint_names": list(skel.joint_names),
                    "parents": skel.parents.tolist(),
                    "control_hz": session.cfg.sim.control_hz,
                },
            )
        )
    ]
    for tick in range(90):
        if tick == 30:
            session.apply_directive_update(
                {"joystick": {"speed": 1.2, "heading": 0.0, "facing": 0.0, "height": 0.85}}
            )
        if tick == 60:
            session.apply_directive_update(
                {"joystick": {"speed": 0.0, "heading": 0.0, "height": 0.4}}
            )
        body = session.tick()
        lines.append(wire.encode(outbox.make("state_frame", body)))
        lines.append(
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
    lines.append(wire.encode(outbox.make("bye", {})))
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_bytes(b"".join(lines))
    print(f"wrote {len(lines)} messages to {OUT}")


if __name__ == "__main__":
    main()
