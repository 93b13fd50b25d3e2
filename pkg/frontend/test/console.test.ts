import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { initialState, isStale, reduce, STALE_AFTER_MS, type ConsoleEvent } from "../src/console.js";
import { replayLog } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const sessionLog = readFileSync(join(here, "fixtures", "session.ndjson"), "utf-8");

function eventsFromLog(): ConsoleEvent[] {
  const events: ConsoleEvent[] = [{ type: "open" }];
  for (const msg of replayLog(sessionLog)) {
    events.push({ type: "message", msg, atMs: msg.t_ms });
  }
  return events;
}

describe("console state", () => {
  it("is a pure function of the event history (replay reproduces it)", () => {
    const events = eventsFromLog();
    const run = () => events.reduce(reduce, initialState());
    const a = run();
    const b = run();
    expect(a).toEqual(b);
    expect(a.latestFrame?.tick).toBe(90);
    expect(a.connection).toBe("closed");
    expect(a.metrics.length).toBeGreaterThan(0);
  });

  it("adopts the skeleton from hello", () => {
    const events = eventsFromLog().slice(0, 2);
    const state = events.reduce(reduce, initialState(3));
    expect(state.hello?.skeleton).toBe("sim13");
    expect(state.masks.joints.length).toBe(14);
  });

  it("stale indicator triggers after 500 ms without frames", () => {
    let state = eventsFromLog().slice(0, 10).reduce(reduce, initialState());
    const lastAt = state.lastFrameAtMs;
    state = reduce(state, { type: "tick", nowMs: lastAt + STALE_AFTER_MS });
    expect(isStale(state)).toBe(false); // exactly at the threshold: not yet
    state = reduce(state, { type: "tick", nowMs: lastAt + STALE_AFTER_MS + 1 });
    expect(isStale(state)).toBe(true);
    expect(STALE_AFTER_MS).toBe(500);
  });

  it("error messages flip the connection state", () => {
    let state = initialState();
    state = reduce(state, { type: "open" });
    state = reduce(state, {
      type: "message",
      msg: { kind: "error", seq: 1, t_ms: 0, message: "boom" },
      atMs: 0,
    });
    expect(state.connection).toBe("error");
    expect(state.errorMessage).toBe("boom");
  });

  it("mask toggles are tracked per joint and per field", () => {
    let state = initialState();
    state = reduce(state, { type: "toggleJoint", index: 3 });
    expect(state.masks.joints[3]).toBe(false);
    state = reduce(state, { type: "toggleField", field: "height" });
    expect(state.masks.height).toBe(false);
  });
});
