// Entry point: create (or join) a session and wire transport, view model,
// and DOM together.

import { PlayConnection, createSession } from "./transport.js";
import { PlayUi } from "./ui.js";
import {
  addNotice,
  addPendingEcho,
  applyFrame,
  initialViewModel,
  markConnecting,
  markDisconnected,
  reconcileWithLog,
  type PlayViewModel,
} from "./viewmodel.js";
import { intensityEvent, moveEvent, utteranceEvent } from "./wire.js";

const ZONES = ["search_area", "street", "corner"];

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("server") ?? window.location.origin;
  let vm: PlayViewModel = initialViewModel();

  const fetchJson = async (url: string, init?: object) => {
    const resp = await fetch(url, init as RequestInit);
    return resp.json();
  };
  const fetchText = async (url: string) => {
    const resp = await fetch(url);
    if (!resp.ok) throw new Error(`GET ${url} -> ${resp.status}`);
    return resp.text();
  };

  const sessionId = params.get("session") ?? (await createSession(base, fetchJson));

  const ui = new PlayUi(
    document,
    {
      onUtterance: (text) => {
        const frame = utteranceEvent(text);
        if (!frame) return; // empty input sends nothing
        if (connection.send(frame)) {
          vm = addPendingEcho(vm, frame.text);
          ui.render(vm);
        }
      },
      onIntensity: (variable, x) => {
        connection.send(intensityEvent(variable, x));
      },
      onMove: (zone) => {
        connection.send(moveEvent(zone));
      },
    },
    ZONES,
  );

  const connection = new PlayConnection(
    base,
    sessionId,
    {
      onFrame: (frame) => {
        vm = applyFrame(vm, frame);
        ui.render(vm);
      },
      onOpen: () => {
        vm = { ...vm, connection: "open" };
        ui.render(vm);
      },
      onClose: () => {
        vm = markDisconnected(vm);
        ui.render(vm);
      },
      onResync: (logText) => {
        vm = addNotice(reconcileWithLog(vm, logText), "resynced from server log");
        ui.render(vm);
      },
    },
    (url) => new WebSocket(url) as unknown as import("./transport.js").SocketLike,
    fetchText,
  );

  vm = markConnecting(vm);
  ui.render(vm);
  connection.connect();
}

void boot();
