/**
 * Wire protocol mhc-wire/1: newline-delimited JSON messages.
 *
 * Every message carries kind, a per-sender increasing sequence number and a
 * millisecond timestamp; unknown fields are ignored (passthrough).  All
 * outgoing messages are validated before send.
 */

import { z } from "zod";

export const WIRE_SCHEMA = "mhc-wire/1";

const vec3 = z.array(z.number()).length(3);
const rot6d = z.array(z.number()).length(6);

const base = z.object({
  schema: z.literal(WIRE_SCHEMA).optional(),
  seq: z.number().int().nonnegative(),
  t_ms: z.number(),
});

export const helloSchema = base.extend({
  kind: z.literal("hello"),
  skeleton: z.string(),
  joint_names: z.array(z.string()),
  parents: z.array(z.number().int()),
  control_hz: z.number(),
}).passthrough();

export const poseSchema = z.object({
  root: z.object({
    pos: vec3,
    rot6d: rot6d,
    lin_vel: vec3,
    ang_vel: vec3,
  }),
  joint_global_pos: z.array(vec3),
  joint_local_pos: z.array(vec3),
}).passthrough();

export const rewardSchema = z.object({
  r_h: z.number(),
  r_o: z.number(),
  r_v: z.number(),
  r_l: z.number(),
  r_tr: z.number(),
  style_parts: z.array(z.number()).length(5),
  r_st: z.number(),
  energy: z.number(),
  total: z.number(),
}).passthrough();

export const stateFrameSchema = base.extend({
  kind: z.literal("state_frame"),
  tick: z.number().int(),
  pose: poseSchema,
  fallen: z.boolean(),
  reward: rewardSchema,
}).passthrough();

export const metricsFrameSchema = base.extend({
  kind: z.literal("metrics_frame"),
  tick: z.number().int(),
  r_tr: z.number(),
  r_st: z.number(),
  total: z.number(),
}).passthrough();

export const directiveUpdateSchema = base.extend({
  kind: z.literal("directive_update"),
  joystick: z.object({
    speed: z.number().nonnegative(),
    heading: z.number(),
    facing: z.number().optional(),
    facing_hold: z.boolean().optional(),
    height: z.number().positive(),
  }),
}).passthrough();

export const errorSchema = base.extend({
  kind: z.literal("error"),
  message: z.string().optional(),
}).passthrough();

export const byeSchema = base.extend({ kind: z.literal("bye") }).passthrough();

export const messageSchema = z.discriminatedUnion("kind", [
  helloSchema,
  stateFrameSchema,
  metricsFrameSchema,
  directiveUpdateSchema,
  errorSchema,
  byeSchema,
]);

export type Hello = z.infer<typeof helloSchema>;
export type StateFrame = z.infer<typeof stateFrameSchema>;
export type MetricsFrame = z.infer<typeof metricsFrameSchema>;
export type DirectiveUpdate = z.infer<typeof directiveUpdateSchema>;
export type WireMessage = z.infer<typeof messageSchema>;

export function decodeLine(line: string): WireMessage {
  return messageSchema.parse(JSON.parse(line));
}

export function encodeMessage(msg: WireMessage): string {
  messageSchema.parse(msg); // every outgoing message validates before send
  return JSON.stringify(msg) + "\n";
}

/** Rejects non-increasing sequence numbers from the peer. */
export class SequenceChecker {
  private last = -1;

  check<T extends WireMessage>(msg: T): T {
    if (msg.seq <= this.last) {
      throw new Error(`sequence number ${msg.seq} not above ${this.last}`);
    }
    this.last = msg.seq;
    return msg;
  }
}

/** Stamps outgoing messages with increasing sequence numbers. */
export class Outbox {
  private seq = 0;

  constructor(private clock: () => number = () => Date.now()) {}

  directiveUpdate(joystick: DirectiveUpdate["joystick"]): DirectiveUpdate {
    this.seq += 1;
    return {
      schema: WIRE_SCHEMA,
      kind: "directive_update",
      seq: this.seq,
      t_ms: this.clock(),
      joystick,
    };
  }
}

/** Replays a recorded NDJSON log, returning every decoded message. */
export function replayLog(text: string): WireMessage[] {
  const checker = new SequenceChecker();
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => checker.check(decodeLine(line)));
}
