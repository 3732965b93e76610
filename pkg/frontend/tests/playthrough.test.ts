// End-to-end: spawn the real session service, play the proactive
// drunk-keys path over the wire through the production transport and view
// model, and check the rendered feed against GET /sessions/{id}/log.

import { spawn, type ChildProcess } from "node:child_process";
import { once } from "node:events";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { PlayConnection, createSession } from "../src/transport.js";
import type { SocketLike } from "../src/transport.js";
import {
  applyFrame,
  degreeBars,
  feedItems,
  initialViewModel,
  markDisconnected,
  reconcileWithLog,
  type PlayViewModel,
} from "../src/viewmodel.js";
import { intensityEvent, moveEvent, utteranceEvent } from "../src/wire.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const REPO = path.resolve(HERE, "..", "..");
const SCRIPT = path.join(REPO, "src", "dramatis", "examples", "drunk_keys.drama");
const PORT = 23000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

function nodeSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const like: SocketLike = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onmessage: null,
    onopen: null,
    onclose: null,
    onerror: null,
  };
  ws.on("message", (data) => like.onmessage?.({ data: data.toString() }));
  ws.on("open", () => like.onopen?.());
  ws.on("close", () => like.onclose?.());
  ws.on("error", (err) => like.onerror?.(err));
  return like;
}

async function fetchJson(url: string, init?: object): Promise<unknown> {
  const resp = await fetch(url, init as RequestInit);
  return resp.json();
}

async function fetchText(url: string): Promise<string> {
  const resp = await fetch(url);
  if (!resp.ok) throw new Error(`GET ${url} -> ${resp.status}`);
  return resp.text();
}

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const resp = await fetch(`${BASE}/sessions`, { method: "POST" });
      if (resp.ok) {
        await resp.json();
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("session service never came up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "dramatis.cli", "serve", SCRIPT, "--port", String(PORT), "--tick-ms", "25"],
    { cwd: REPO, stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stderr?.on("data", () => undefined);
  await waitForServer();
}, 30000);

afterAll(async () => {
  server.kill("SIGTERM");
  await Promise.race([once(server, "exit"), new Promise((r) => setTimeout(r, 2000))]);
});

describe("proactive playthrough over the wire", () => {
  it("completes the story and the rendered feed equals the server log", async () => {
    const sessionId = await createSession(BASE, fetchJson);
    let vm: PlayViewModel = initialViewModel();
    const connection = new PlayConnection(
      BASE,
      sessionId,
      {
        onFrame: (frame) => {
          vm = applyFrame(vm, frame);
        },
        onOpen: () => {
          vm = { ...vm, connection: "open" };
        },
        onClose: () => {
          vm = markDisconnected(vm);
        },
        onResync: (logText) => {
          vm = reconcileWithLog(vm, logText);
        },
      },
      nodeSocket,
      fetchText,
    );
    connection.connect();

    const waitFor = async (predicate: () => boolean, what: string) => {
      for (let i = 0; i < 400; i++) {
        if (predicate()) return;
        await new Promise((resolve) => setTimeout(resolve, 25));
      }
      throw new Error(`timed out waiting for ${what}`);
    };

    await waitFor(() => vm.connection === "open", "socket open");
    await waitFor(() => vm.step === "ss2", "first fallback to pass ss1");

    // the participant plays: asks, reports intensity, helps, asks the question
    connection.send(utteranceEvent("what is the problem")!);
    await waitFor(() => vm.step === "ss3", "the reveal");

    connection.send(intensityEvent("surprise", 0.8));
    await waitFor(
      () => (vm.degrees["surprise"]?.["surprised"] ?? 0) > 0, "degree update");
    // degree bars show exactly the server-sent membership values
    const fromServer = vm.degrees["surprise"]!;
    const bars = Object.fromEntries(degreeBars(vm, "surprise"));
    expect(bars["surprised"]).toBe(fromServer["surprised"]);
    expect(bars["NOTP"]).toBe(fromServer["NOTP"]);

    connection.send(moveEvent("search_area"));
    await waitFor(() => vm.step === "ss4", "joining the search");

    connection.send(utteranceEvent("are you sure of having them lost over here")!);
    await waitFor(() => vm.sessionStatus === "ended", "the finale");
    connection.close();

    // zero client authority: the rendered feed is exactly the server log
    const logText = await fetchText(`${BASE}/sessions/${sessionId}/log`);
    const logLines = logText.trim().split("\n").slice(1); // drop schema line
    const rendered = feedItems(vm)
      .filter((item) => item.kind === "entry")
      .map((item) => item.text);
    expect(rendered).toEqual(logLines);
    expect(vm.pending).toEqual([]);

    // the story beats all happened, in order
    const actions = vm.entries.map((e) => e.action);
    expect(actions[0]).toBe("ambient");
    expect(actions).toContain("drunk_tells_keys");
    expect(actions).toContain("policeman_searches");
    expect(actions.at(-2)).toBe("streetlamp_off");
    expect(actions.at(-1)).toBe("END");
    const bracket = vm.entries.find((e) => e.cause === "bracket-inserted");
    expect(bracket?.action).toBe("policeman_appears");
  }, 60000);

  it("reconnect re-syncs the feed from the log", async () => {
    const sessionId = await createSession(BASE, fetchJson);
    let vm: PlayViewModel = initialViewModel();
    let resyncs = 0;
    const connection = new PlayConnection(
      BASE,
      sessionId,
      {
        onFrame: (frame) => {
          vm = applyFrame(vm, frame);
        },
        onOpen: () => {
          vm = { ...vm, connection: "open" };
        },
        onClose: () => {
          vm = markDisconnected(vm);
        },
        onResync: (logText) => {
          resyncs += 1;
          vm = reconcileWithLog(vm, logText);
        },
      },
      nodeSocket,
      fetchText,
    );
    connection.connect();

    const waitFor = async (predicate: () => boolean, what: string) => {
      for (let i = 0; i < 400; i++) {
        if (predicate()) return;
        await new Promise((resolve) => setTimeout(resolve, 25));
      }
      throw new Error(`timed out waiting for ${what}`);
    };

    await waitFor(() => vm.connection === "open", "socket open");
    await waitFor(() => vm.entries.length >= 2, "first entries");

    // simulate a dropped connection: the transport reconnects and re-syncs
    (connection as unknown as { socket: { close(): void } | null }).socket?.close();
    await waitFor(() => resyncs >= 2, "resync after reconnect");

    const logText = await fetchText(`${BASE}/sessions/${sessionId}/log`);
    const logLines = logText.trim().split("\n").slice(1);
    const rendered = feedItems(vm)
      .filter((item) => item.kind === "entry")
      .map((item) => item.text);
    // feed order equals server log order even across the reconnect
    expect(rendered).toEqual(logLines.slice(0, rendered.length));
    connection.close();
  }, 60000);
});
