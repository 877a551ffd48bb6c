import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { parseServerMessage } from "../src/protocol.js";
import { replay } from "../src/state.js";
import { ServerHandle, TestSession, sleep, startServer } from "./helpers.js";

describe("protocol codec", () => {
  it("rejects garbage", () => {
    expect(() => parseServerMessage("not json")).toThrow(/unparseable/);
    expect(() => parseServerMessage("42")).toThrow(/not an object/);
    expect(() => parseServerMessage('{"type":"mystery"}')).toThrow(/unknown/);
  });

  it("accepts well-formed frames", () => {
    const msg = parseServerMessage('{"type":"frame","t":0.01,"values":{"x":1}}');
    expect(msg.type).toBe("frame");
  });
});

describe("live server round trip", () => {
  let server: ServerHandle;

  beforeAll(async () => {
    server = await startServer();
  }, 30000);

  afterAll(() => {
    server.stop();
  });

  it("frames match the server-side recording sample for sample", async () => {
    const session = new TestSession(server.port);
    await session.open();
    session.send({
      type: "init",
      calculator: "F",
      sensor: { duration: 8.0 },
      speed: 0,
    });
    const ready = await session.next();
    if (ready?.type !== "ready") throw new Error("expected ready");
    const sessionId = ready.session;

    const frames: { t: number; values: Record<string, number> }[] = [];
    let forceSent = false;
    for (;;) {
      const msg = await session.next();
      if (msg === null) break; // session ran out: duration reached
      if (msg.type === "frame") {
        frames.push({ t: msg.t, values: msg.values });
        if (!forceSent && frames.length >= 50) {
          session.send({ type: "force", fx: 0.5, fy: 0.0 });
          forceSent = true;
        }
      }
    }
    expect(frames.length).toBe(800); // 8s at 0.01 minus the t=0 sample

    // The recording appears once the session closes.
    let recording: string | undefined;
    for (let i = 0; i < 50 && !recording; i++) {
      const files = readdirSync(server.recordDir)
        .filter((f) => f === `${sessionId}.csv`);
      if (files.length > 0) recording = readFileSync(
        join(server.recordDir, files[0]!), "utf-8");
      else await sleep(100);
    }
    expect(recording).toBeDefined();
    const lines = recording!.trim().split("\n");
    const header = lines[0]!.split(",");
    expect(header).toEqual(["t", "x", "y", "fx", "fy"]);
    expect(lines.length).toBe(802); // header + 801 samples including t=0

    // Sample-for-sample: frame k corresponds to recorded sample k+1 (the
    // recording also holds the pre-stream t=0 sample), i.e. lines[k+2].
    frames.forEach((frame, k) => {
      const row = lines[k + 2]!.split(",");
      expect(Number(row[0])).toBe(frame.t);
      expect(Number(row[1])).toBe(frame.values["x"]);
      expect(Number(row[2])).toBe(frame.values["y"]);
    });

    // The force we sent shows up in the force log.
    const fxColumn = lines.slice(1).map((l) => Number(l.split(",")[3]));
    expect(Math.max(...fxColumn)).toBeCloseTo(0.5);

    // Replaying the captured log is deterministic, snapshot-compare style.
    const finalState = replay(session.log);
    expect(replay(session.log)).toEqual(finalState);
    expect(finalState.framesSeen).toBe(800);
  }, 60000);

  it("force on a controllerless session yields an error message", async () => {
    const session = new TestSession(server.port);
    await session.open();
    session.send({ type: "init", calculator: "E",
                   sensor: { duration: 2.0 }, speed: 0 });
    const ready = await session.next();
    expect(ready?.type).toBe("ready");
    session.send({ type: "force", fx: 1, fy: 0 });
    for (;;) {
      const msg = await session.next();
      expect(msg).not.toBeNull();
      if (msg!.type === "error") {
        expect(msg).toMatchObject({ message: "no controller" });
        break;
      }
    }
    session.close();
  }, 30000);
});
