// Mirror of the server wire protocol (see PROTOCOL.md at the repo root).
// Every displayed number must originate from one of these messages.

export interface Wall {
  axis: "x" | "y";
  position: number;
}

export interface Declaration {
  family: string;
  params: Record<string, number>;
  declared_dof_count: number;
  declared_constraints: Wall[];
  declared_output_dofs: string[];
}

export interface ReadyMessage {
  type: "ready";
  session: string;
  calculator: string;
  output_dofs: string[];
  input_dofs: string[];
  declaration: Declaration;
  sample_period: number;
  quantum: number;
  speed: number;
}

export interface FrameMessage {
  type: "frame";
  t: number;
  values: Record<string, number>;
}

export interface FitMessage {
  type: "fit";
  t: number;
  best_family: string;
  residual: number;
  n_events: number;
}

export interface VerdictPayload {
  physicality: string;
  agreement: string;
  best_family: string;
  params: Record<string, number>;
  residual: number;
  unexplained_events: number;
  inferred_walls: Wall[];
}

export interface ProbeReportPayload {
  probe: string;
  pass: boolean | "inconclusive";
  max_residual: number | null;
  predicted: number | null;
  measured: number | null;
  events: unknown[];
}

export interface VerdictMessage {
  type: "verdict";
  source: "probe" | "release_watch" | "passive";
  verdict: VerdictPayload;
  report?: ProbeReportPayload;
}

export interface ProbeReportMessage {
  type: "probe_report";
  report: ProbeReportPayload;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage =
  | ReadyMessage
  | FrameMessage
  | FitMessage
  | VerdictMessage
  | ProbeReportMessage
  | ErrorMessage;

export type ProbeKind =
  | "force_schedule"
  | "stop_and_release"
  | "coupling_sweep"
  | "battery";

export interface InitMessage {
  type: "init";
  calculator: string;
  params?: Record<string, number | number[]>;
  sensor?: { sample_period?: number; quantum?: number; duration?: number };
  speed?: number;
}

export interface ForceMessage {
  type: "force";
  fx: number;
  fy: number;
}

export interface ProbeMessage {
  type: "probe";
  kind: ProbeKind;
}

export type ClientMessage = InitMessage | ForceMessage | ProbeMessage;

const SERVER_TYPES = new Set([
  "ready",
  "frame",
  "fit",
  "verdict",
  "probe_report",
  "error",
]);

export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new Error(`unparseable server message: ${raw.slice(0, 120)}`);
  }
  if (typeof data !== "object" || data === null) {
    throw new Error("server message is not an object");
  }
  const type = (data as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) {
    throw new Error(`unknown server message type: ${String(type)}`);
  }
  if (type === "frame") {
    const frame = data as FrameMessage;
    if (typeof frame.t !== "number" || typeof frame.values !== "object") {
      throw new Error("malformed frame message");
    }
  }
  return data as ServerMessage;
}

export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}
