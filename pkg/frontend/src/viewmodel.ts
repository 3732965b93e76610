// Pure projection of server frames into renderable state. No story logic
// lives here: degrees, causes, and ordering are pass-through, which is what
// the reconciliation test (feed equals GET /log) relies on.

import type { HelloFrame, LogEntry, MatrixSnapshot, ServerFrame, UpdateFrame } from "./wire.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface FeedItem {
  kind: "entry" | "pending" | "notice";
  text: string;
  cause?: string;
  seq?: number;
}

export interface PendingEcho {
  id: number;
  text: string;
}

export interface PlayViewModel {
  connection: ConnectionStatus;
  sessionStatus: string;
  title: string;
  scene: string;
  step: string;
  clock: number;
  entries: LogEntry[];
  pending: PendingEcho[];
  degrees: Record<string, Record<string, number>>;
  blockNotp: number;
  agents: UpdateFrame["agents"];
  matrix: MatrixSnapshot | null;
  variables: Record<string, string[]>;
  lastError: string | null;
  notices: string[];
}

export function initialViewModel(): PlayViewModel {
  return {
    connection: "connecting",
    sessionStatus: "unknown",
    title: "",
    scene: "",
    step: "",
    clock: 0,
    entries: [],
    pending: [],
    degrees: {},
    blockNotp: 1.0,
    agents: {},
    matrix: null,
    variables: {},
    lastError: null,
    notices: [],
  };
}

export function applyFrame(vm: PlayViewModel, frame: ServerFrame): PlayViewModel {
  if (frame.type === "hello") return applyHello(vm, frame);
  if (frame.type === "update") return applyUpdate(vm, frame);
  return { ...vm, lastError: `${frame.code}: ${frame.message}` };
}

function applyHello(vm: PlayViewModel, frame: HelloFrame): PlayViewModel {
  return {
    ...vm,
    connection: "open",
    sessionStatus: frame.status,
    title: frame.title,
    scene: frame.scene,
    step: frame.step,
    clock: frame.clock,
    variables: frame.variables,
  };
}

function applyUpdate(vm: PlayViewModel, frame: UpdateFrame): PlayViewModel {
  const entries = mergeEntries(vm.entries, frame.entries);
  // an acknowledged utterance clears its local echo: the server either
  // logged something for it or moved the clock past it
  const pending = frame.entries.length > 0 || frame.status !== vm.sessionStatus
    ? []
    : vm.pending;
  return {
    ...vm,
    sessionStatus: frame.status,
    scene: frame.scene,
    step: frame.step,
    clock: frame.clock,
    entries,
    pending,
    degrees: frame.degrees,
    blockNotp: frame.block_notp,
    agents: frame.agents,
    matrix: frame.matrix ?? null,
  };
}

function mergeEntries(current: LogEntry[], incoming: LogEntry[]): LogEntry[] {
  if (incoming.length === 0) return current;
  const known = new Set(current.map((e) => e.seq));
  const merged = current.concat(incoming.filter((e) => !known.has(e.seq)));
  merged.sort((a, b) => a.seq - b.seq);
  return merged;
}

let echoCounter = 0;

export function addPendingEcho(vm: PlayViewModel, text: string): PlayViewModel {
  echoCounter += 1;
  return { ...vm, pending: [...vm.pending, { id: echoCounter, text }] };
}

export function markDisconnected(vm: PlayViewModel): PlayViewModel {
  return { ...vm, connection: "closed" };
}

export function markConnecting(vm: PlayViewModel): PlayViewModel {
  return { ...vm, connection: "connecting" };
}

export function addNotice(vm: PlayViewModel, text: string): PlayViewModel {
  return { ...vm, notices: [...vm.notices, text] };
}

/**
 * Fold the authoritative server log (text from GET /sessions/{id}/log) into
 * the feed. Runs after every connect so entries the socket never saw (logged
 * at session creation or during a gap) appear; entries from updates that
 * raced past the log snapshot survive the merge. Order is always seq order.
 */
export function reconcileWithLog(vm: PlayViewModel, logText: string): PlayViewModel {
  const entries = mergeEntries(parseLogText(logText), vm.entries);
  return { ...vm, entries, pending: [] };
}

export function parseLogText(logText: string): LogEntry[] {
  const entries: LogEntry[] = [];
  for (const line of logText.split("\n")) {
    if (!line.trim() || line.startsWith("schema=")) continue;
    const fields = new Map<string, string>();
    for (const part of line.split(" ")) {
      const eq = part.indexOf("=");
      if (eq > 0) fields.set(part.slice(0, eq), part.slice(eq + 1));
    }
    const deg: Record<string, number> = {};
    const degText = fields.get("deg");
    if (degText) {
      for (const pair of degText.split(",")) {
        const eq = pair.lastIndexOf("=");
        if (eq > 0) deg[pair.slice(0, eq)] = Number(pair.slice(eq + 1));
      }
    }
    entries.push({
      t: Number(fields.get("t") ?? 0),
      seq: Number(fields.get("seq") ?? 0),
      action: fields.get("action") ?? "",
      by: fields.get("by") ?? "",
      cause: fields.get("cause") ?? "",
      src: fields.get("src") ?? "",
      deg,
      line,
    });
  }
  return entries;
}

/** The feed as rendered: server entries in seq order, then local echoes. */
export function feedItems(vm: PlayViewModel): FeedItem[] {
  const items: FeedItem[] = vm.entries.map((entry) => ({
    kind: "entry",
    text: entry.line,
    cause: entry.cause,
    seq: entry.seq,
  }));
  for (const echo of vm.pending) {
    items.push({ kind: "pending", text: `(you) ${echo.text}` });
  }
  return items;
}

/** Degree bars for one variable, NOTP last, exactly as the server sent them;
 * a variable with no reading yet renders all-zero bars. */
export function degreeBars(vm: PlayViewModel, variableId: string): [string, number][] {
  const terms = vm.variables[variableId] ?? [];
  const sent = vm.degrees[variableId] ?? {};
  const bars: [string, number][] = terms.map((t) => [t, sent[t] ?? 0]);
  bars.push(["NOTP", sent["NOTP"] ?? 0]);
  return bars;
}
