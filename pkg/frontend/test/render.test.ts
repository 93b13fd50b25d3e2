import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { initialState, reduce, type ConsoleState } from "../src/console.js";
import { replayLog, type StateFrame } from "../src/protocol.js";
import { buildScene, jointMarkers } from "../src/render.js";

const here = dirname(fileURLToPath(import.meta.url));
const sessionLog = readFileSync(join(here, "fixtures", "session.ndjson"), "utf-8");

function stateWithFrames(n: number): ConsoleState {
  let state = initialState();
  state = reduce(state, { type: "open" });
  let taken = 0;
  for (const msg of replayLog(sessionLog)) {
    if (taken >= n && msg.kind === "state_frame") break;
    state = reduce(state, { type: "message", msg, atMs: msg.t_ms });
    if (msg.kind === "state_frame") taken += 1;
  }
  return state;
}

describe("scene building", () => {
  it("draws one bone per joint in each view, upright and unbadged at rest", () => {
    const state = stateWithFrames(5);
    const items = buildScene(state);
    const bones = items.filter((d) => d.kind === "bone");
    expect(bones.length).toBe(2 * 14);
    expect(items.some((d) => d.kind === "badge")).toBe(false);
    expect(items.some((d) => d.kind === "stale")).toBe(false);
    // side view: the head sits well above the ground, nothing below it
    const sideBones = bones.filter((b) => b.view === "side");
    const zs = sideBones.flatMap((b) => [b.a[1], b.b[1]]);
    expect(Math.max(...zs)).toBeGreaterThan(1.2);
    expect(Math.min(...zs)).toBeGreaterThan(-0.05);
  });

  it("flags a fallen frame with the recovering badge", () => {
    const state = stateWithFrames(5);
    const frame = state.latestFrame as StateFrame;
    const fallen = { ...frame, fallen: true };
    const items = buildScene({ ...state, latestFrame: fallen });
    expect(items.some((d) => d.kind === "badge" && d.text === "recovering")).toBe(true);
  });

  it("shows the stale indicator after a simulated stall", () => {
    let state = stateWithFrames(5);
    state = reduce(state, { type: "tick", nowMs: state.lastFrameAtMs + 501 });
    const items = buildScene(state);
    expect(items.some((d) => d.kind === "stale")).toBe(true);
  });

  it("masked joints get no target markers", () => {
    const state = stateWithFrames(5);
    const targets = (state.latestFrame as StateFrame).pose.joint_global_pos;
    const all = jointMarkers(state, targets);
    expect(all.filter((d) => d.kind === "marker").length).toBe(2 * 14);
    let masked = state;
    for (const index of [0, 1, 2]) {
      masked = reduce(masked, { type: "toggleJoint", index });
    }
    const fewer = jointMarkers(masked, targets);
    expect(fewer.filter((d) => d.kind === "marker").length).toBe(2 * 11);
  });

  it("field toggles gate the root-target markers", () => {
    let state = stateWithFrames(5);
    state = reduce(state, { type: "stick", which: "left", stick: { x: 0, y: 1, trigger: 1 } });
    const withVel = buildScene(state);
    expect(withVel.some((d) => d.kind === "marker" && d.role === "velocity")).toBe(true);
    state = reduce(state, { type: "toggleField", field: "velocity" });
    const withoutVel = buildScene(state);
    expect(withoutVel.some((d) => d.kind === "marker" && d.role === "velocity")).toBe(false);
  });
});
