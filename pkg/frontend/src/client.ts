// Thin WebSocket session client with reconnect. All incoming messages are
// parsed and handed to a single listener; the UI never touches the socket
// directly.

import {
  ClientMessage,
  InitMessage,
  ServerMessage,
  encodeClientMessage,
  parseServerMessage,
} from "./protocol.js";

export interface SessionClientOptions {
  url: string;
  init: InitMessage;
  onMessage: (msg: ServerMessage) => void;
  onStatus: (status: "connecting" | "open" | "closed") => void;
  reconnectDelayMs?: number;
}

export class SessionClient {
  private ws: WebSocket | null = null;
  private closedByUser = false;

  constructor(private readonly opts: SessionClientOptions) {}

  connect(): void {
    this.closedByUser = false;
    this.opts.onStatus("connecting");
    const ws = new WebSocket(this.opts.url);
    this.ws = ws;
    ws.onopen = () => {
      this.opts.onStatus("open");
      ws.send(encodeClientMessage(this.opts.init));
    };
    ws.onmessage = (event) => {
      try {
        this.opts.onMessage(parseServerMessage(String(event.data)));
      } catch (err) {
        console.warn("dropping malformed server message", err);
      }
    };
    ws.onclose = () => {
      this.opts.onStatus("closed");
      this.ws = null;
      if (!this.closedByUser && this.opts.reconnectDelayMs) {
        setTimeout(() => this.connect(), this.opts.reconnectDelayMs);
      }
    };
    ws.onerror = () => {
      // onclose follows; nothing else to do here.
    };
  }

  send(msg: ClientMessage): boolean {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encodeClientMessage(msg));
      return true;
    }
    return false;
  }

  close(): void {
    this.closedByUser = true;
    this.ws?.close();
  }
}
