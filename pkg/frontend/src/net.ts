/**
 * WebSocket client for the steering session (run the server with
 * `--transport ws`).  Each WebSocket text frame carries one JSON line.
 */

import { decodeLine, SequenceChecker, type WireMessage } from "./protocol.js";

export interface NetCallbacks {
  onMessage(msg: WireMessage, atMs: number): void;
  onOpen(): void;
  onClose(): void;
  onError(detail: string): void;
}

export class WireClient {
  private ws: WebSocket | null = null;
  private checker = new SequenceChecker();

  constructor(private callbacks: NetCallbacks, private clock: () => number = () => Date.now()) {}

  connect(host: string, port: number): void {
    const ws = new WebSocket(`ws://${host}:${port}`);
    this.ws = ws;
    ws.onopen = () => this.callbacks.onOpen();
    ws.onclose = () => this.callbacks.onClose();
    ws.onerror = () => this.callbacks.onError("socket error");
    ws.onmessage = (event) => {
      for (const line of String(event.data).split("\n")) {
        if (!line.trim()) continue;
        try {
          this.callbacks.onMessage(this.checker.check(decodeLine(line)), this.clock());
        } catch (err) {
          this.callbacks.onError(String(err));
          ws.close();
          return;
        }
      }
    };
  }

  send(encoded: string): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encoded);
    }
  }

  close(): void {
    this.ws?.close();
  }
}
