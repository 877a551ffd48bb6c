// View state and its reducer. The reducer is a pure function of
// (state, message): replaying a recorded message log reproduces the exact
// same state, which is what the replay test pins down. No physics lives
// here; the view can only echo what the server said.

import type {
  Declaration,
  ServerMessage,
  VerdictPayload,
  Wall,
} from "./protocol.js";

export interface TrailPoint {
  t: number;
  values: Record<string, number>;
}

export interface Banner {
  tone: "agree" | "disagree" | "info" | "error";
  text: string;
}

export interface ProbeOutcome {
  probe: string;
  pass: boolean | "inconclusive";
  predicted: number | null;
  measured: number | null;
}

export interface ViewState {
  connection: "idle" | "ready" | "closed";
  session: string | null;
  calculator: string | null;
  outputDofs: string[];
  inputDofs: string[];
  declaration: Declaration | null;
  samplePeriod: number;
  frames: TrailPoint[];
  latest: TrailPoint | null;
  residuals: { t: number; residual: number; family: string }[];
  walls: Wall[];
  verdict: VerdictPayload | null;
  verdictSource: string | null;
  banner: Banner | null;
  probeOutcomes: ProbeOutcome[];
  lastError: string | null;
  framesSeen: number;
}

export const TRAIL_LENGTH = 400;
export const RESIDUAL_HISTORY = 200;

export function initialViewState(): ViewState {
  return {
    connection: "idle",
    session: null,
    calculator: null,
    outputDofs: [],
    inputDofs: [],
    declaration: null,
    samplePeriod: 0.01,
    frames: [],
    latest: null,
    residuals: [],
    walls: [],
    verdict: null,
    verdictSource: null,
    banner: null,
    probeOutcomes: [],
    lastError: null,
    framesSeen: 0,
  };
}

export function applyMessage(state: ViewState, msg: ServerMessage): ViewState {
  switch (msg.type) {
    case "ready":
      return {
        ...initialViewState(),
        connection: "ready",
        session: msg.session,
        calculator: msg.calculator,
        outputDofs: msg.output_dofs,
        inputDofs: msg.input_dofs,
        declaration: msg.declaration,
        samplePeriod: msg.sample_period,
        banner: {
          tone: "info",
          text: `session ${msg.session}: watching ${msg.calculator}`,
        },
      };
    case "frame": {
      const point = { t: msg.t, values: msg.values };
      const frames =
        state.frames.length >= TRAIL_LENGTH
          ? [...state.frames.slice(1), point]
          : [...state.frames, point];
      return { ...state, frames, latest: point, framesSeen: state.framesSeen + 1 };
    }
    case "fit": {
      const entry = { t: msg.t, residual: msg.residual, family: msg.best_family };
      const residuals =
        state.residuals.length >= RESIDUAL_HISTORY
          ? [...state.residuals.slice(1), entry]
          : [...state.residuals, entry];
      return { ...state, residuals };
    }
    case "verdict": {
      const agrees = msg.verdict.agreement === "Agrees";
      return {
        ...state,
        verdict: msg.verdict,
        verdictSource: msg.source,
        walls: msg.verdict.inferred_walls,
        banner: {
          tone: agrees ? "agree" : "disagree",
          text: `${msg.verdict.agreement}: ${msg.verdict.physicality}` +
            (msg.report ? ` (predicted ${fmt(msg.report.predicted)}, ` +
              `measured ${fmt(msg.report.measured)})` : ""),
        },
      };
    }
    case "probe_report": {
      const outcome: ProbeOutcome = {
        probe: msg.report.probe,
        pass: msg.report.pass,
        predicted: msg.report.predicted,
        measured: msg.report.measured,
      };
      return { ...state, probeOutcomes: [...state.probeOutcomes, outcome] };
    }
    case "error":
      return {
        ...state,
        lastError: msg.message,
        banner: { tone: "error", text: msg.message },
      };
    default:
      return state;
  }
}

export function replay(messages: ServerMessage[]): ViewState {
  let state = initialViewState();
  for (const msg of messages) {
    state = applyMessage(state, msg);
  }
  return state;
}

function fmt(value: number | null): string {
  if (value === null || value === undefined) return "n/a";
  if (value !== 0 && Math.abs(value) < 1e-2) return value.toExponential(2);
  return value.toPrecision(3);
}
