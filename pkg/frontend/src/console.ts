/**
 * Console state: a pure reducer over wire messages and input events.
 *
 * Replaying the same message + input history always reproduces the same
 * state, which is what the replay tests rely on.
 */

import type { Hello, MetricsFrame, StateFrame, WireMessage } from "./protocol.js";

export const STALE_AFTER_MS = 500;
export const METRIC_WINDOW = 300;

export interface StickState {
  x: number; // right positive, in [-1, 1]
  y: number; // up positive, in [-1, 1]
  trigger: number; // in [0, 1]
}

export interface MaskToggles {
  /** joint-level toggles: true = joint selected (markers shown) */
  joints: boolean[];
  velocity: boolean;
  height: boolean;
  facing: boolean;
}

export interface ConsoleState {
  connection: "idle" | "connected" | "closed" | "error";
  hello: Hello | null;
  latestFrame: StateFrame | null;
  lastFrameAtMs: number;
  nowMs: number;
  metrics: MetricsFrame[];
  errorMessage: string;
  left: StickState;
  right: StickState;
  masks: MaskToggles;
}

export function initialState(jointCount = 14): ConsoleState {
  return {
    connection: "idle",
    hello: null,
    latestFrame: null,
    lastFrameAtMs: -1,
    nowMs: 0,
    metrics: [],
    errorMessage: "",
    left: { x: 0, y: 0, trigger: 1 },
    right: { x: 0, y: 0, trigger: 1 },
    masks: {
      joints: Array(jointCount).fill(true),
      velocity: true,
      height: true,
      facing: true,
    },
  };
}

export type ConsoleEvent =
  | { type: "open" }
  | { type: "message"; msg: WireMessage; atMs: number }
  | { type: "close" }
  | { type: "stick"; which: "left" | "right"; stick: Partial<StickState> }
  | { type: "toggleJoint"; index: number }
  | { type: "toggleField"; field: "velocity" | "height" | "facing" }
  | { type: "tick"; nowMs: number };

export function reduce(state: ConsoleState, event: ConsoleEvent): ConsoleState {
  switch (event.type) {
    case "open":
      return { ...state, connection: "connected", errorMessage: "" };
    case "close":
      return { ...state, connection: state.connection === "error" ? "error" : "closed" };
    case "tick":
      return { ...state, nowMs: event.nowMs };
    case "stick": {
      const updated = { ...state[event.which], ...event.stick };
      return { ...state, [event.which]: updated };
    }
    case "toggleJoint": {
      const joints = state.masks.joints.slice();
      joints[event.index] = !joints[event.index];
      return { ...state, masks: { ...state.masks, joints } };
    }
    case "toggleField": {
      return {
        ...state,
        masks: { ...state.masks, [event.field]: !state.masks[event.field] },
      };
    }
    case "message":
      return applyMessage(state, event.msg, event.atMs);
  }
}

function applyMessage(state: ConsoleState, msg: WireMessage, atMs: number): ConsoleState {
  switch (msg.kind) {
    case "hello":
      return {
        ...state,
        hello: msg,
        connection: "connected",
        masks: {
          ...state.masks,
          joints: Array(msg.joint_names.length).fill(true),
        },
      };
    case "state_frame":
      return { ...state, latestFrame: msg, lastFrameAtMs: atMs, nowMs: atMs };
    case "metrics_frame": {
      const metrics = state.metrics.concat([msg]);
      if (metrics.length > METRIC_WINDOW) metrics.splice(0, metrics.length - METRIC_WINDOW);
      return { ...state, metrics, nowMs: atMs };
    }
    case "error":
      return { ...state, connection: "error", errorMessage: msg.message ?? "unknown error" };
    case "bye":
      return { ...state, connection: "closed" };
    case "directive_update":
      return state; // echoes are ignored
  }
}

/** True once no frame arrived for STALE_AFTER_MS. */
export function isStale(state: ConsoleState): boolean {
  if (state.lastFrameAtMs < 0) return true;
  return state.nowMs - state.lastFrameAtMs > STALE_AFTER_MS;
}
