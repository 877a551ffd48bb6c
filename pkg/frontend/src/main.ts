// Entry point: wire the session client, the drag controller, the probe
// panel, and the render loop together.

import { SessionClient } from "./client.js";
import { DragController } from "./input.js";
import type { ProbeKind, ServerMessage } from "./protocol.js";
import { render } from "./render.js";
import { applyMessage, initialViewState, ViewState } from "./state.js";

const CALCULATORS = ["A", "B_full", "B_partial", "C", "D", "E", "F", "G", "H", "X"];
const PROBES: ProbeKind[] = [
  "force_schedule",
  "stop_and_release",
  "coupling_sweep",
  "battery",
];

let state: ViewState = initialViewState();
let client: SessionClient | null = null;
let lastFrameWallTime = 0;

const canvas = document.getElementById("view") as HTMLCanvasElement;
const picker = document.getElementById("calculator") as HTMLSelectElement;
const connectBtn = document.getElementById("connect") as HTMLButtonElement;
const probePanel = document.getElementById("probes") as HTMLDivElement;
const declarationPanel = document.getElementById("declaration") as HTMLPreElement;
const staleBadge = document.getElementById("stale") as HTMLSpanElement;

for (const cid of CALCULATORS) {
  const opt = document.createElement("option");
  opt.value = cid;
  opt.textContent = cid;
  picker.appendChild(opt);
}

for (const kind of PROBES) {
  const btn = document.createElement("button");
  btn.textContent = kind.replace(/_/g, " ");
  btn.dataset.kind = kind;
  btn.onclick = () => client?.send({ type: "probe", kind });
  probePanel.appendChild(btn);
}

function handleMessage(msg: ServerMessage): void {
  state = applyMessage(state, msg);
  if (msg.type === "frame") lastFrameWallTime = performance.now();
  if (msg.type === "ready") {
    // Show the builder's claim verbatim so the human can judge agreement.
    declarationPanel.textContent = JSON.stringify(msg.declaration, null, 2);
    updateControlAvailability();
  }
}

function updateControlAvailability(): void {
  const hasController = state.inputDofs.length > 0;
  canvas.title = hasController
    ? "drag to push the marker"
    : "no controller on this machine: observation only";
  for (const btn of Array.from(probePanel.querySelectorAll("button"))) {
    (btn as HTMLButtonElement).disabled = !hasController;
  }
}

connectBtn.onclick = () => {
  client?.close();
  state = initialViewState();
  const proto = location.protocol === "https:" ? "wss" : "ws";
  client = new SessionClient({
    url: `${proto}://${location.host}/ws`,
    init: { type: "init", calculator: picker.value },
    onMessage: handleMessage,
    onStatus: (status) => {
      if (status === "closed") {
        state = {
          ...state,
          connection: "closed",
          banner: { tone: "error", text: "connection lost; reconnecting" },
        };
      }
    },
    reconnectDelayMs: 2000,
  });
  client.connect();
};

const drag = new DragController((cmd) => {
  if (state.inputDofs.length > 0) {
    client?.send({ type: "force", fx: cmd.fx, fy: cmd.fy });
  }
});

canvas.addEventListener("pointerdown", (e) => {
  canvas.setPointerCapture(e.pointerId);
  drag.pointerDown(e.offsetX, e.offsetY);
});
canvas.addEventListener("pointermove", (e) => drag.pointerMove(e.offsetX, e.offsetY));
canvas.addEventListener("pointerup", () => drag.pointerUp());
canvas.addEventListener("pointercancel", () => drag.pointerUp());

function loop(): void {
  render(state, canvas);
  const stale = state.framesSeen > 0
    && performance.now() - lastFrameWallTime > 2000;
  staleBadge.style.display = stale ? "inline" : "none";
  requestAnimationFrame(loop);
}
requestAnimationFrame(loop);
