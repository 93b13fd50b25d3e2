/** Browser entry point: wires sockets, virtual sticks and the renderer. */

import { initialState, reduce, type ConsoleState } from "./console.js";
import { commandToBody, joystickCommand, shouldSend } from "./joystick.js";
import { WireClient } from "./net.js";
import { encodeMessage, Outbox } from "./protocol.js";
import { buildScene } from "./render.js";
import { paint, type Viewport } from "./canvas.js";

function viewport(id: string, scale: number, center: [number, number]): Viewport {
  const canvas = document.getElementById(id) as HTMLCanvasElement;
  return {
    ctx: canvas.getContext("2d")!,
    width: canvas.width,
    height: canvas.height,
    scale,
    center,
  };
}

function bindStick(el: HTMLElement, onMove: (x: number, y: number) => void): void {
  let active = false;
  const rect = () => el.getBoundingClientRect();
  const update = (ev: PointerEvent) => {
    const r = rect();
    const x = ((ev.clientX - r.left) / r.width) * 2 - 1;
    const y = -(((ev.clientY - r.top) / r.height) * 2 - 1);
    onMove(Math.max(-1, Math.min(1, x)), Math.max(-1, Math.min(1, y)));
  };
  el.addEventListener("pointerdown", (ev) => {
    active = true;
    el.setPointerCapture(ev.pointerId);
    update(ev);
  });
  el.addEventListener("pointermove", (ev) => active && update(ev));
  const release = () => {
    active = false;
    onMove(0, 0);
  };
  el.addEventListener("pointerup", release);
  el.addEventListener("pointercancel", release);
}

function main(): void {
  const params = new URLSearchParams(window.location.search);
  const host = params.get("host") ?? "127.0.0.1";
  const port = Number(params.get("port") ?? "7731");

  let state: ConsoleState = initialState();
  const dispatch = (event: Parameters<typeof reduce>[1]) => {
    state = reduce(state, event);
  };

  const outbox = new Outbox();
  const client = new WireClient({
    onMessage: (msg, atMs) => dispatch({ type: "message", msg, atMs }),
    onOpen: () => dispatch({ type: "open" }),
    onClose: () => dispatch({ type: "close" }),
    onError: () => dispatch({ type: "close" }),
  });
  client.connect(host, port);

  bindStick(document.getElementById("stick-left")!, (x, y) =>
    dispatch({ type: "stick", which: "left", stick: { x, y } })
  );
  bindStick(document.getElementById("stick-right")!, (x, y) =>
    dispatch({ type: "stick", which: "right", stick: { x, y } })
  );
  (document.getElementById("trigger-left") as HTMLInputElement).addEventListener("input", (ev) =>
    dispatch({
      type: "stick",
      which: "left",
      stick: { trigger: Number((ev.target as HTMLInputElement).value) },
    })
  );
  (document.getElementById("trigger-right") as HTMLInputElement).addEventListener("input", (ev) =>
    dispatch({
      type: "stick",
      which: "right",
      stick: { trigger: Number((ev.target as HTMLInputElement).value) },
    })
  );
  for (const field of ["velocity", "height", "facing"] as const) {
    document
      .getElementById(`mask-${field}`)!
      .addEventListener("change", () => dispatch({ type: "toggleField", field }));
  }

  const viewports = {
    top: viewport("view-top", 50, [0, 0]),
    side: viewport("view-side", 80, [0, 0.8]),
  };
  const badge = document.getElementById("badge")!;
  const stats = document.getElementById("stats")!;

  let lastSent = -1e9;
  const loop = () => {
    const now = performance.now();
    dispatch({ type: "tick", nowMs: Date.now() });
    if (state.connection === "connected" && shouldSend(lastSent, now)) {
      lastSent = now;
      client.send(encodeMessage(outbox.directiveUpdate(commandToBody(joystickCommand(state)))));
    }
    if (state.latestFrame) {
      const root = state.latestFrame.pose.root.pos;
      viewports.top.center = [root[0], root[1]];
      viewports.side.center = [root[0], 0.8];
      const r = state.latestFrame.reward;
      stats.textContent =
        `tick ${state.latestFrame.tick}  ` +
        `r_tr ${r.r_tr.toFixed(2)}  r_st ${r.r_st.toFixed(2)}  total ${r.total.toFixed(2)}`;
    }
    paint(viewports, buildScene(state), badge);
    requestAnimationFrame(loop);
  };
  requestAnimationFrame(loop);
}

main();
