// The view model is a pure projection of server frames: these tests feed it
// hand-built frames and check it never invents or transforms story state.

import { describe, expect, it } from "vitest";

import {
  addPendingEcho,
  applyFrame,
  degreeBars,
  feedItems,
  initialViewModel,
  markDisconnected,
  parseLogText,
  reconcileWithLog,
} from "../src/viewmodel.js";
import type { HelloFrame, LogEntry, UpdateFrame } from "../src/wire.js";
import { intensityEvent, moveEvent, parseServerFrame, utteranceEvent } from "../src/wire.js";

function hello(overrides: Partial<HelloFrame> = {}): HelloFrame {
  return {
    schema_version: "drama-wire/1",
    type: "hello",
    session_id: "s1",
    title: "t",
    status: "running",
    scene: "sc1",
    step: "ss1",
    clock: 0,
    log_length: 0,
    variables: { anger: ["very_angry", "not_very_angry", "slightly_angry"] },
    tick_ms: 1000,
    ...overrides,
  };
}

function entry(seq: number, action: string, cause = "stated"): LogEntry {
  return {
    t: seq, seq, action, by: "x", cause, src: "sc1.ss1.i0", deg: {},
    line: `t=${seq} seq=${seq} cause=${cause} action=${action} by=x src=sc1.ss1.i0`,
  };
}

function update(entries: LogEntry[], overrides: Partial<UpdateFrame> = {}): UpdateFrame {
  return {
    schema_version: "drama-wire/1",
    type: "update",
    session_id: "s1",
    status: "running",
    scene: "sc1",
    step: "ss2",
    clock: entries.length ? entries[entries.length - 1]!.t : 1,
    entries,
    degrees: {},
    block_notp: 1.0,
    agents: {},
    matrix: null,
    ...overrides,
  };
}

describe("projection", () => {
  it("hello populates variables and position", () => {
    const vm = applyFrame(initialViewModel(), hello());
    expect(vm.connection).toBe("open");
    expect(vm.step).toBe("ss1");
    expect(Object.keys(vm.variables)).toEqual(["anger"]);
  });

  it("updates append entries in seq order and dedupe", () => {
    let vm = applyFrame(initialViewModel(), hello());
    vm = applyFrame(vm, update([entry(0, "ambient"), entry(1, "drunk_searches")]));
    vm = applyFrame(vm, update([entry(1, "drunk_searches"), entry(2, "visitor_approaches")]));
    expect(vm.entries.map((e) => e.seq)).toEqual([0, 1, 2]);
  });

  it("degree bars are pass-through, NOTP last", () => {
    let vm = applyFrame(initialViewModel(), hello());
    vm = applyFrame(vm, update([], {
      degrees: { anger: { very_angry: 0.3, not_very_angry: 0.0, slightly_angry: 0.1, NOTP: 0.7 } },
    }));
    expect(degreeBars(vm, "anger")).toEqual([
      ["very_angry", 0.3],
      ["not_very_angry", 0.0],
      ["slightly_angry", 0.1],
      ["NOTP", 0.7],
    ]);
  });

  it("unsent variables render zero bars, no invention", () => {
    const vm = applyFrame(initialViewModel(), hello());
    expect(degreeBars(vm, "anger").every(([, d]) => d === 0)).toBe(true);
  });

  it("error frames surface without touching the feed", () => {
    let vm = applyFrame(initialViewModel(), hello());
    vm = applyFrame(vm, update([entry(0, "ambient")]));
    const before = vm.entries;
    vm = applyFrame(vm, {
      schema_version: "drama-wire/1", type: "error", code: "bad-frame", message: "nope",
    });
    expect(vm.lastError).toContain("bad-frame");
    expect(vm.entries).toBe(before);
  });

  it("matrix snapshot passes through untouched", () => {
    let vm = applyFrame(initialViewModel(), hello());
    const matrix = {
      id: "m", row_variable: "a", col_variable: "b",
      rows: ["x", "NOTP"], cols: ["y", "NOTP"],
      cells: [{ row: "x", col: "y", score: 0.4, actions: ["A1"] }],
    };
    vm = applyFrame(vm, update([], { matrix }));
    expect(vm.matrix).toEqual(matrix);
  });
});

describe("feed", () => {
  it("feed text equals server log lines in order", () => {
    let vm = applyFrame(initialViewModel(), hello());
    const entries = [entry(0, "ambient"), entry(1, "drunk_searches"), entry(2, "END")];
    vm = applyFrame(vm, update([entries[0]!]));
    vm = applyFrame(vm, update([entries[1]!, entries[2]!]));
    expect(feedItems(vm).map((i) => i.text)).toEqual(entries.map((e) => e.line));
  });

  it("pending echo shows until an acknowledging update", () => {
    let vm = applyFrame(initialViewModel(), hello());
    vm = addPendingEcho(vm, "what is the problem");
    expect(feedItems(vm).at(-1)).toMatchObject({ kind: "pending" });
    vm = applyFrame(vm, update([entry(0, "drunk_tells_keys", "rule")]));
    expect(vm.pending).toEqual([]);
    expect(feedItems(vm).every((i) => i.kind === "entry")).toBe(true);
  });

  it("reconcile folds the authoritative log into the feed", () => {
    let vm = applyFrame(initialViewModel(), hello());
    // only a later entry arrived over the socket; 0 and 1 predate it
    vm = applyFrame(vm, update([entry(2, "drunk_comments", "rule")]));
    vm = addPendingEcho(vm, "hello");
    const logText = [
      "schema=drama-log/1",
      "t=0 seq=0 cause=stated action=ambient src=sc1",
      "t=0 seq=1 cause=stated action=drunk_searches by=drunk_guy src=sc1.ss1.i0",
      "t=5 seq=2 cause=rule action=drunk_comments by=drunk_guy src=sc1.ss2.i0.r1 deg=says:other_question=1.0000",
    ].join("\n") + "\n";
    vm = reconcileWithLog(vm, logText);
    expect(vm.entries.map((e) => e.action)).toEqual(
      ["ambient", "drunk_searches", "drunk_comments"]);
    expect(vm.pending).toEqual([]);
    const parsed = parseLogText(logText);
    expect(parsed[2]!.deg).toEqual({ "says:other_question": 1.0 });
  });

  it("entries that raced past the log snapshot survive reconcile", () => {
    let vm = applyFrame(initialViewModel(), hello());
    vm = applyFrame(vm, update([entry(3, "late_arrival", "rule")]));
    const logText = [
      "schema=drama-log/1",
      "t=0 seq=0 cause=stated action=ambient src=sc1",
    ].join("\n") + "\n";
    vm = reconcileWithLog(vm, logText);
    expect(vm.entries.map((e) => e.seq)).toEqual([0, 3]);
  });

  it("disconnect flips the banner state only", () => {
    let vm = applyFrame(initialViewModel(), hello());
    vm = applyFrame(vm, update([entry(0, "ambient")]));
    const entries = vm.entries;
    vm = markDisconnected(vm);
    expect(vm.connection).toBe("closed");
    expect(vm.entries).toBe(entries);
  });
});

describe("event builders", () => {
  it("empty utterance sends nothing", () => {
    expect(utteranceEvent("")).toBeNull();
    expect(utteranceEvent("   ")).toBeNull();
  });

  it("slider value maps to an intensity event unchanged", () => {
    expect(intensityEvent("anger", 0.8)).toEqual({
      schema_version: "drama-wire/1", type: "event", kind: "intensity",
      variable: "anger", x: 0.8,
    });
  });

  it("movement button maps to a move event", () => {
    expect(moveEvent("search_area")).toEqual({
      schema_version: "drama-wire/1", type: "event", kind: "move", zone: "search_area",
    });
  });

  it("server frames parse defensively", () => {
    expect(parseServerFrame("not json")).toBeNull();
    expect(parseServerFrame('{"type": "mystery"}')).toBeNull();
    expect(parseServerFrame(JSON.stringify(hello()))?.type).toBe("hello");
  });
});
