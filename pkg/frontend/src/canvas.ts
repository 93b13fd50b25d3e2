/** Canvas painter: walks a draw list onto the two viewport canvases. */

import type { DrawItem, View } from "./render.js";

export interface Viewport {
  ctx: CanvasRenderingContext2D;
  width: number;
  height: number;
  scale: number; // pixels per meter
  center: [number, number]; // world point at the canvas center
}

const COLORS: Record<string, string> = {
  bone: "#cfe3ff",
  velocity: "#7CFC00",
  facing: "#ffcc00",
  height: "#ff7b9c",
  joint: "#9ad0ff",
};

function toPx(vp: Viewport, p: [number, number]): [number, number] {
  return [
    vp.width / 2 + (p[0] - vp.center[0]) * vp.scale,
    vp.height / 2 - (p[1] - vp.center[1]) * vp.scale,
  ];
}

export function paint(viewports: Record<View, Viewport>, items: DrawItem[], badgeEl: HTMLElement): void {
  for (const vp of Object.values(viewports)) {
    vp.ctx.fillStyle = "#10141c";
    vp.ctx.fillRect(0, 0, vp.width, vp.height);
  }
  let badge = "";
  let stale = false;
  for (const item of items) {
    if (item.kind === "badge") {
      badge = item.text;
      continue;
    }
    if (item.kind === "stale") {
      stale = true;
      continue;
    }
    const vp = viewports[item.view];
    const ctx = vp.ctx;
    if (item.kind === "ground") {
      const [, y] = toPx(vp, [0, item.z]);
      ctx.strokeStyle = "#3a4152";
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(vp.width, y);
      ctx.stroke();
    } else if (item.kind === "bone") {
      ctx.strokeStyle = badge ? "#ff8888" : COLORS.bone;
      ctx.lineWidth = 2;
      const a = toPx(vp, item.a);
      const b = toPx(vp, item.b);
      ctx.beginPath();
      ctx.moveTo(a[0], a[1]);
      ctx.lineTo(b[0], b[1]);
      ctx.stroke();
      ctx.fillStyle = COLORS.bone;
      ctx.fillRect(b[0] - 2, b[1] - 2, 4, 4);
    } else if (item.kind === "marker") {
      ctx.fillStyle = COLORS[item.role];
      const p = toPx(vp, item.at);
      ctx.beginPath();
      ctx.arc(p[0], p[1], 4, 0, Math.PI * 2);
      ctx.fill();
    }
  }
  badgeEl.textContent = stale ? "stale: no frames" : badge;
  badgeEl.className = stale ? "badge stale" : badge ? "badge fallen" : "badge";
}
