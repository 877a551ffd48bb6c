// The deception-breaking walkthrough: hold the luminous point still by
// dragging against its motion, let go, and watch the verdict banner flip.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { applyMessage, initialViewState, ViewState } from "../src/state.js";
import { ServerHandle, TestSession, startServer } from "./helpers.js";

describe("H walkthrough", () => {
  let server: ServerHandle;

  beforeAll(async () => {
    server = await startServer();
  }, 30000);

  afterAll(() => {
    server.stop();
  });

  it("drag-to-stop on H flips the banner to Disagrees", async () => {
    const session = new TestSession(server.port);
    await session.open();
    // Feedback needs bounded latency between frame and force, so pace the
    // session instead of free-running it.
    session.send({
      type: "init",
      calculator: "H",
      sensor: { duration: 90.0 },
      speed: 50,
    });

    let state: ViewState = initialViewState();
    const history: { t: number; x: number; y: number }[] = [];
    let vx = 0;
    let vy = 0;
    let heldAtRest = 0;
    let released = false;

    for (let i = 0; i < 12000; i++) {
      const msg = await session.next();
      expect(msg).not.toBeNull();
      state = applyMessage(state, msg!);
      if (msg!.type === "verdict") break;
      if (msg!.type !== "frame") continue;
      const x = msg!.values["x"]!;
      const y = msg!.values["y"]!;
      const t = msg!.t;
      const prev = history[history.length - 1];
      if (prev) {
        const dt = t - prev.t;
        vx = 0.8 * vx + (0.2 * (x - prev.x)) / dt;
        vy = 0.8 * vy + (0.2 * (y - prev.y)) / dt;
      }
      history.push({ t, x, y });
      if (released) continue;
      if (history.length > 100) {
        const old = history[history.length - 101]!;
        const vbar = Math.hypot(x - old.x, y - old.y) / (t - old.t);
        if (vbar < 0.02) heldAtRest++;
      }
      if (heldAtRest > 150) {
        // The human lets go of the pointer: one final zero-force message.
        session.send({ type: "force", fx: 0, fy: 0 });
        released = true;
      } else {
        session.send({ type: "force", fx: -4 * vx, fy: -4 * vy });
      }
    }

    expect(released).toBe(true);
    expect(state.verdict).not.toBeNull();
    expect(state.verdictSource).toBe("release_watch");
    expect(state.verdict!.agreement).toBe("Disagrees");
    expect(state.banner?.tone).toBe("disagree");
    expect(state.banner?.text).toContain("Disagrees");
    const report = session.log.find((m) => m.type === "verdict");
    expect(report).toBeDefined();
    session.close();
  }, 120000);
});
