// Thin WebSocket wrapper: JSON in, JSON out, reconnect on drop.

import type { MirrorDoc } from "./messages.js";

const RECONNECT_DELAY_MS = 1000;

export interface LinkHandlers {
  onDoc: (doc: MirrorDoc) => void;
  onUp: () => void;
  onDown: () => void;
}

export class MirrorLink {
  private ws: WebSocket | null = null;
  private closed = false;

  constructor(
    private url: string,
    private handlers: LinkHandlers,
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;

    ws.onopen = () => this.handlers.onUp();

    ws.onmessage = (event: MessageEvent) => {
      let doc: MirrorDoc;
      try {
        doc = JSON.parse(event.data as string);
      } catch {
        console.error("bad mirror payload:", event.data);
        return;
      }
      this.handlers.onDoc(doc);
    };

    ws.onclose = () => {
      this.ws = null;
      this.handlers.onDown();
      if (!this.closed) {
        setTimeout(() => this.open(), RECONNECT_DELAY_MS);
      }
    };

    ws.onerror = () => ws.close();
  }

  send(doc: MirrorDoc): boolean {
    if (this.ws === null || this.ws.readyState !== WebSocket.OPEN) {
      return false;
    }
    this.ws.send(JSON.stringify(doc));
    return true;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
