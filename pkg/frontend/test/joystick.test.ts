import { describe, expect, it } from "vitest";

import { initialState, reduce } from "../src/console.js";
import {
  commandToBody,
  CROUCH_HEIGHT,
  joystickCommand,
  MAX_SPEED,
  shouldSend,
} from "../src/joystick.js";
import { directiveUpdateSchema, Outbox } from "../src/protocol.js";

function withSticks(left: Partial<{ x: number; y: number; trigger: number }>, right: Partial<{ x: number; y: number; trigger: number }>) {
  let state = initialState();
  state = reduce(state, { type: "stick", which: "left", stick: left });
  state = reduce(state, { type: "stick", which: "right", stick: right });
  return state;
}

describe("stick mapping", () => {
  it("centered sticks command zero speed and hold facing", () => {
    const cmd = joystickCommand(withSticks({ x: 0, y: 0 }, { x: 0, y: 0 }));
    expect(cmd.speed).toBe(0);
    expect(cmd.facing).toBeUndefined();
    expect(cmd.facing_hold).toBe(true);
  });

  it("full forward with max trigger commands the run preset exactly", () => {
    const cmd = joystickCommand(withSticks({ x: 0, y: 1, trigger: 1 }, { x: 0, y: 0 }));
    expect(cmd.speed).toBe(MAX_SPEED);
    expect(cmd.speed).toBe(2.5);
    expect(cmd.heading).toBeCloseTo(0, 12); // screen-up is world +x
  });

  it("height trigger at minimum commands the crouch preset exactly", () => {
    const cmd = joystickCommand(withSticks({ x: 0, y: 0 }, { x: 0, y: 0, trigger: 0 }));
    expect(cmd.height).toBe(CROUCH_HEIGHT);
    expect(cmd.height).toBe(0.4);
  });

  it("deflected right stick sets facing", () => {
    const cmd = joystickCommand(withSticks({ x: 0, y: 0 }, { x: -1, y: 0 }));
    expect(cmd.facing).toBeCloseTo(Math.PI / 2, 12);
    expect(cmd.facing_hold).toBeUndefined();
  });

  it("emitted directive_update validates against the wire schema", () => {
    const out = new Outbox(() => 1);
    const state = withSticks({ x: 0.3, y: 0.8, trigger: 0.5 }, { x: 0, y: 0, trigger: 0.7 });
    const msg = out.directiveUpdate(commandToBody(joystickCommand(state)));
    expect(() => directiveUpdateSchema.parse(msg)).not.toThrow();
  });
});

describe("send rate limit", () => {
  it("never sends above 30 Hz", () => {
    expect(shouldSend(0, 20)).toBe(false);
    expect(shouldSend(0, 33.4)).toBe(true);
    let sent = 0;
    let last = -1e9;
    for (let now = 0; now < 1000; now += 5) {
      if (shouldSend(last, now)) {
        last = now;
        sent += 1;
      }
    }
    expect(sent).toBeLessThanOrEqual(30);
  });
});
