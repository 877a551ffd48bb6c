// Test harness: spawn the session server as a child process and talk to it
// over a real WebSocket, the same way the browser UI does.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";

import type { ClientMessage, ServerMessage } from "../src/protocol.js";
import { encodeClientMessage, parseServerMessage } from "../src/protocol.js";

export interface ServerHandle {
  port: number;
  recordDir: string;
  proc: ChildProcess;
  stop: () => void;
}

export async function startServer(): Promise<ServerHandle> {
  const port = 21000 + Math.floor(Math.random() * 20000);
  const recordDir = mkdtempSync(join(tmpdir(), "vrlab-ui-test-"));
  const proc = spawn(
    "python3",
    ["-m", "vrlab.cli", "serve", "--port", String(port),
     "--record-dir", recordDir],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  await new Promise<void>((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new Error("server did not start within 20s")), 20000);
    proc.stdout?.on("data", (chunk: Buffer) => {
      if (chunk.toString().includes("LISTENING")) {
        clearTimeout(timer);
        // uvicorn needs a beat after the banner before it accepts sockets
        setTimeout(resolve, 300);
      }
    });
    proc.stderr?.on("data", () => undefined);
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`server exited early with code ${code}`));
    });
  });
  return {
    port,
    recordDir,
    proc,
    stop: () => {
      proc.kill("SIGTERM");
    },
  };
}

/** Buffered WebSocket client: every server message lands in a queue. */
export class TestSession {
  private ws: WebSocket;
  private queue: ServerMessage[] = [];
  private waiters: ((msg: ServerMessage | null) => void)[] = [];
  private closed = false;
  log: ServerMessage[] = [];

  constructor(port: number) {
    this.ws = new WebSocket(`ws://127.0.0.1:${port}/ws`);
    this.ws.on("message", (data) => {
      const msg = parseServerMessage(data.toString());
      this.log.push(msg);
      const waiter = this.waiters.shift();
      if (waiter) waiter(msg);
      else this.queue.push(msg);
    });
    this.ws.on("close", () => {
      this.closed = true;
      for (const waiter of this.waiters.splice(0)) waiter(null);
    });
  }

  async open(): Promise<void> {
    if (this.ws.readyState === WebSocket.OPEN) return;
    await new Promise<void>((resolve, reject) => {
      this.ws.once("open", resolve);
      this.ws.once("error", reject);
    });
  }

  send(msg: ClientMessage): void {
    this.ws.send(encodeClientMessage(msg));
  }

  /** Next message, or null once the session is over. */
  async next(timeoutMs = 30000): Promise<ServerMessage | null> {
    const queued = this.queue.shift();
    if (queued) return queued;
    if (this.closed) return null;
    return await new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("timed out waiting for a server message")),
        timeoutMs);
      this.waiters.push((msg) => {
        clearTimeout(timer);
        resolve(msg);
      });
    });
  }

  async waitClosed(timeoutMs = 60000): Promise<void> {
    if (this.closed) return;
    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("session did not close in time")), timeoutMs);
      this.ws.once("close", () => {
        clearTimeout(timer);
        resolve();
      });
    });
  }

  close(): void {
    this.ws.close();
  }
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
