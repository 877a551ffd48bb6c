// Canvas presentation of a ViewState. Pure consumers of state: nothing here
// predicts motion or reads anything but received messages.

import type { ViewState, TrailPoint } from "./state.js";

export interface Viewport {
  width: number;
  height: number;
  worldHalf: number; // world units from center to the nearest canvas edge
}

export function worldToScreen(
  x: number,
  y: number,
  vp: Viewport,
): [number, number] {
  const scale = Math.min(vp.width, vp.height) / (2 * vp.worldHalf);
  return [vp.width / 2 + x * scale, vp.height / 2 - y * scale];
}

export function viewportFor(state: ViewState, width: number, height: number): Viewport {
  let half = 6;
  const decl = state.declaration;
  if (decl && decl.declared_constraints.length > 0) {
    half = Math.max(
      ...decl.declared_constraints.map((w) => Math.abs(w.position)),
    ) * 1.15;
  } else if (state.frames.length > 0) {
    let extent = 1e-6;
    for (const f of state.frames) {
      for (const v of Object.values(f.values)) {
        extent = Math.max(extent, Math.abs(v));
      }
    }
    half = extent * 1.4;
  }
  return { width, height, worldHalf: half };
}

export function bodyPositions(point: TrailPoint, dofs: string[]):
  { x: number; y: number }[] {
  const out: { x: number; y: number }[] = [];
  for (const dof of dofs) {
    if (!dof.startsWith("x")) continue;
    const mate = "y" + dof.slice(1);
    const x = point.values[dof];
    const y = point.values[mate];
    if (x !== undefined && y !== undefined) out.push({ x, y });
  }
  return out;
}

export function trailAlpha(index: number, length: number): number {
  return 0.05 + 0.95 * (index / Math.max(length - 1, 1));
}

const TONE_COLORS: Record<string, string> = {
  agree: "#2e7d32",
  disagree: "#c62828",
  info: "#455a64",
  error: "#e65100",
};

export function render(state: ViewState, canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const vp = viewportFor(state, canvas.width, canvas.height);
  ctx.fillStyle = "#0b0e14"; // the dark room
  ctx.fillRect(0, 0, vp.width, vp.height);

  // Inferred walls from the latest verdict.
  ctx.strokeStyle = "#4a617a";
  ctx.setLineDash([6, 6]);
  for (const wall of state.walls) {
    ctx.beginPath();
    if (wall.axis === "x") {
      const [sx] = worldToScreen(wall.position, 0, vp);
      ctx.moveTo(sx, 0);
      ctx.lineTo(sx, vp.height);
    } else {
      const [, sy] = worldToScreen(0, wall.position, vp);
      ctx.moveTo(0, sy);
      ctx.lineTo(vp.width, sy);
    }
    ctx.stroke();
  }
  ctx.setLineDash([]);

  // Fading trails, then the luminous markers.
  const n = state.frames.length;
  state.frames.forEach((frame, i) => {
    const alpha = trailAlpha(i, n) * 0.35;
    for (const p of bodyPositions(frame, state.outputDofs)) {
      const [sx, sy] = worldToScreen(p.x, p.y, vp);
      ctx.fillStyle = `rgba(255, 235, 130, ${alpha})`;
      ctx.beginPath();
      ctx.arc(sx, sy, 2, 0, 2 * Math.PI);
      ctx.fill();
    }
  });
  if (state.latest) {
    for (const p of bodyPositions(state.latest, state.outputDofs)) {
      const [sx, sy] = worldToScreen(p.x, p.y, vp);
      ctx.fillStyle = "#ffd54f";
      ctx.beginPath();
      ctx.arc(sx, sy, 6, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  drawResidualSparkline(state, ctx, vp);

  if (state.banner) {
    ctx.fillStyle = TONE_COLORS[state.banner.tone] ?? "#455a64";
    ctx.fillRect(0, 0, vp.width, 28);
    ctx.fillStyle = "#ffffff";
    ctx.font = "14px system-ui, sans-serif";
    ctx.fillText(state.banner.text, 10, 19);
  }
}

function drawResidualSparkline(
  state: ViewState,
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
): void {
  const hist = state.residuals;
  if (hist.length < 2) return;
  const w = 160;
  const h = 40;
  const x0 = vp.width - w - 10;
  const y0 = vp.height - h - 10;
  ctx.fillStyle = "rgba(20, 26, 36, 0.85)";
  ctx.fillRect(x0, y0, w, h);
  const max = Math.max(...hist.map((r) => r.residual), 1e-9);
  ctx.strokeStyle = "#80cbc4";
  ctx.beginPath();
  hist.forEach((r, i) => {
    const px = x0 + (i / (hist.length - 1)) * w;
    const py = y0 + h - (r.residual / max) * (h - 4) - 2;
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
  ctx.fillStyle = "#b0bec5";
  ctx.font = "10px system-ui, sans-serif";
  const last = hist[hist.length - 1];
  if (last) {
    ctx.fillText(`fit ${last.family} ~ ${last.residual.toFixed(2)}q`, x0 + 4, y0 + 12);
  }
}
