/**
 * Stick-to-directive mapping.
 *
 * Left stick steers the velocity direction, its trigger scales speed up to
 * the run preset (2.5 m/s at full deflection and full trigger).  The right
 * stick sets facing (held when centered), its trigger sets the root height
 * between the crouch preset (0.4 m, trigger released) and standing.
 */

import type { ConsoleState } from "./console.js";
import type { DirectiveUpdate } from "./protocol.js";

export const MAX_SPEED = 2.5; // m/s, run preset
export const MIN_SPEED_SCALE = 0.4; // trigger released: 1.0 m/s at full stick
export const CROUCH_HEIGHT = 0.4; // m, height-trigger minimum
export const STAND_HEIGHT = 0.9; // m, height-trigger maximum
export const DEADZONE = 0.05;
export const MIN_SEND_INTERVAL_MS = 1000 / 30; // never send above the control rate

function magnitude(x: number, y: number): number {
  return Math.min(1, Math.hypot(x, y));
}

/** Screen sticks (x right, y up) map to world headings: up is +x (north). */
export function stickHeading(x: number, y: number): number {
  return Math.atan2(-x, y);
}

export interface JoystickCommand {
  speed: number;
  heading: number;
  facing?: number;
  facing_hold?: boolean;
  height: number;
}

export function joystickCommand(state: ConsoleState): JoystickCommand {
  const { left, right } = state;
  const mag = magnitude(left.x, left.y);
  const speed =
    mag <= DEADZONE
      ? 0
      : mag * (MIN_SPEED_SCALE + (1 - MIN_SPEED_SCALE) * left.trigger) * MAX_SPEED;
  const heading = mag <= DEADZONE ? 0 : stickHeading(left.x, left.y);
  const height = CROUCH_HEIGHT + right.trigger * (STAND_HEIGHT - CROUCH_HEIGHT);
  const cmd: JoystickCommand = { speed, heading, height };
  if (magnitude(right.x, right.y) > DEADZONE) {
    cmd.facing = stickHeading(right.x, right.y);
  } else {
    cmd.facing_hold = true; // keep the last commanded facing
  }
  return cmd;
}

/** 30 Hz outgoing rate limit. */
export function shouldSend(lastSentMs: number, nowMs: number): boolean {
  return nowMs - lastSentMs >= MIN_SEND_INTERVAL_MS;
}

export function commandToBody(cmd: JoystickCommand): DirectiveUpdate["joystick"] {
  const body: DirectiveUpdate["joystick"] = {
    speed: cmd.speed,
    heading: cmd.heading,
    height: cmd.height,
  };
  if (cmd.facing !== undefined) body.facing = cmd.facing;
  if (cmd.facing_hold) body.facing_hold = true;
  return body;
}
