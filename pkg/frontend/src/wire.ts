// Wire schema shared with the session service. The console never invents
// state: everything it renders arrives in one of these frames.

export const SCHEMA_VERSION = "drama-wire/1";

export interface LogEntry {
  t: number;
  seq: number;
  action: string;
  by: string;
  cause: string;
  src: string;
  deg: Record<string, number>;
  line: string;
}

export interface HelloFrame {
  schema_version: string;
  type: "hello";
  session_id: string;
  title: string;
  status: string;
  scene: string;
  step: string;
  clock: number;
  log_length: number;
  variables: Record<string, string[]>;
  tick_ms: number;
}

export interface UpdateFrame {
  schema_version: string;
  type: "update";
  session_id: string;
  status: string;
  scene: string;
  step: string;
  clock: number;
  entries: LogEntry[];
  degrees: Record<string, Record<string, number>>;
  block_notp: number;
  agents: Record<string, AgentSnapshot>;
  matrix: MatrixSnapshot | null;
}

export interface MatrixSnapshot {
  id: string;
  row_variable: string;
  col_variable: string;
  rows: string[];
  cols: string[];
  cells: { row: string; col: string; score: number; actions: string[] }[];
}

export interface AgentSnapshot {
  selected: string | null;
  payload: string[];
  activations: Record<string, number>;
}

export interface ErrorFrame {
  schema_version: string;
  type: "error";
  code: string;
  message: string;
}

export type ServerFrame = HelloFrame | UpdateFrame | ErrorFrame;

export interface UtteranceFrame {
  schema_version: string;
  type: "event";
  kind: "utterance";
  text: string;
}

export type EventFrame =
  | UtteranceFrame
  | { schema_version: string; type: "event"; kind: "intensity"; variable: string; x: number }
  | { schema_version: string; type: "event"; kind: "move"; zone: string };

export function parseServerFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const frame = data as { type?: unknown };
  if (frame.type === "hello" || frame.type === "update" || frame.type === "error") {
    return data as ServerFrame;
  }
  return null;
}

// Each input panel gesture becomes exactly one schema-valid frame, or null
// when there is nothing to send (the empty-utterance guard).

export function utteranceEvent(text: string): UtteranceFrame | null {
  const trimmed = text.trim();
  if (!trimmed) return null;
  return { schema_version: SCHEMA_VERSION, type: "event", kind: "utterance", text: trimmed };
}

export function intensityEvent(variable: string, x: number): EventFrame {
  return { schema_version: SCHEMA_VERSION, type: "event", kind: "intensity", variable, x };
}

export function moveEvent(zone: string): EventFrame {
  return { schema_version: SCHEMA_VERSION, type: "event", kind: "move", zone };
}
