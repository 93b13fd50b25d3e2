/**
 * Scene building: state -> a plain draw list for two orthographic views.
 *
 * Pure data out (no canvas access), so rendering decisions are unit
 * testable; the canvas painter just walks the list.
 */

import { isStale, type ConsoleState } from "./console.js";
import { joystickCommand } from "./joystick.js";

export type View = "top" | "side";

export type DrawItem =
  | { kind: "bone"; view: View; a: [number, number]; b: [number, number] }
  | { kind: "marker"; view: View; at: [number, number]; role: "velocity" | "facing" | "height" | "joint" }
  | { kind: "ground"; view: View; z: number }
  | { kind: "badge"; text: string }
  | { kind: "stale" };

/** World (x, y, z) to view plane: top view is (x, y); side view is (x, z). */
export function project(view: View, p: number[]): [number, number] {
  return view === "top" ? [p[0], p[1]] : [p[0], p[2]];
}

export function buildScene(state: ConsoleState): DrawItem[] {
  const items: DrawItem[] = [];
  items.push({ kind: "ground", view: "side", z: 0 });
  if (isStale(state)) {
    items.push({ kind: "stale" });
  }
  const frame = state.latestFrame;
  const hello = state.hello;
  if (!frame || !hello) return items;

  const joints = frame.pose.joint_global_pos;
  const rootPos = frame.pose.root.pos;
  for (const view of ["top", "side"] as View[]) {
    for (let j = 0; j < joints.length; j++) {
      const parent = hello.parents[j];
      const from = parent < 0 ? rootPos : joints[parent];
      items.push({ kind: "bone", view, a: project(view, from), b: project(view, joints[j]) });
    }
  }
  if (frame.fallen) {
    items.push({ kind: "badge", text: "recovering" });
  }

  // target markers: only dimensions the current mask toggles select
  const cmd = joystickCommand(state);
  if (state.masks.velocity && cmd.speed > 0) {
    const tip: [number, number] = [
      rootPos[0] + Math.cos(cmd.heading) * cmd.speed * 0.4,
      rootPos[1] + Math.sin(cmd.heading) * cmd.speed * 0.4,
    ];
    items.push({ kind: "marker", view: "top", at: tip, role: "velocity" });
  }
  if (state.masks.facing && cmd.facing !== undefined) {
    items.push({
      kind: "marker",
      view: "top",
      at: [rootPos[0] + Math.cos(cmd.facing) * 0.5, rootPos[1] + Math.sin(cmd.facing) * 0.5],
      role: "facing",
    });
  }
  if (state.masks.height) {
    items.push({ kind: "marker", view: "side", at: [rootPos[0], cmd.height], role: "height" });
  }
  for (let j = 0; j < joints.length; j++) {
    if (state.masks.joints[j]) continue; // selected joints need no extra marker here
  }
  return items;
}

/** Per-joint target markers for fully specified directives (mask rule). */
export function jointMarkers(state: ConsoleState, targets: number[][]): DrawItem[] {
  const items: DrawItem[] = [];
  for (let j = 0; j < targets.length; j++) {
    if (!state.masks.joints[j]) continue; // masked joints get no markers
    for (const view of ["top", "side"] as View[]) {
      items.push({ kind: "marker", view, at: project(view, targets[j]), role: "joint" });
    }
  }
  return items;
}
