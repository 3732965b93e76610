"""Network service hosting live interactive sessions.

Endpoints:
  POST /sessions                 create a session, returns its id
  GET  /sessions/{id}/play       WebSocket: client sends event frames,
                                 server pushes update frames
  GET  /sessions/{id}/log        the action log, line format (text/plain)
  GET  /sessions/{id}/trace      every applied event, trace format

A per-session wall-clock ticker injects Tick events so NOTP latencies elapse
in real time; every applied event (ticks included) is recorded, so replaying
the recorded trace through the batch runner reproduces the live log byte for
byte.  All frames are JSON objects carrying a schema_version field.  Sessions
are independent: one slow or broken client never blocks another session.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from aiohttp import WSMsgType, web

from . import agents as agent_layer
from .errors import DramaError, SessionEnded, StaleEvent
from .events import Event, Intensity, Move, Tick, Utterance
from .model import ScriptDoc
from .runtime import RUNNING, RuntimeConfig, SessionState, handle_event, start_session
from .tracefile import format_event, format_log_entry, LOG_SCHEMA, TRACE_SCHEMA

SCHEMA_VERSION = "drama-wire/1"
log = logging.getLogger("dramatis.service")

HOST_KEY = web.AppKey("host", object)


@dataclass
class SessionHandle:
    """One hosted session plus its connections and recording."""

    session_id: str
    created_at: float
    config: RuntimeConfig
    state: SessionState
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    recorded: list[Event] = field(default_factory=list)
    queues: list[asyncio.Queue] = field(default_factory=list)
    ticker: asyncio.Task | None = None
    reaper: asyncio.Task | None = None
    networks: dict = field(default_factory=dict)
    log_file: object | None = None
    trace_file: object | None = None


class SessionHost:
    def __init__(self, doc: ScriptDoc, config: RuntimeConfig | None = None,
                 tick_ms: int = 1000, grace_s: float = 30.0,
                 session_log_dir: Path | None = None):
        self.doc = doc
        self.config = config or RuntimeConfig()
        self.tick_ms = tick_ms
        self.grace_s = grace_s
        self.session_log_dir = session_log_dir
        self.sessions: dict[str, SessionHandle] = {}

    # -- lifecycle -----------------------------------------------------------

    def create_session(self, seed: int = 0) -> SessionHandle:
        state = start_session(self.doc, self.config, seed)
        handle = SessionHandle(
            session_id=uuid.uuid4().hex,
            created_at=time.time(),
            config=self.config,
            state=state,
            networks=agent_layer.networks_from_script(self.doc),
        )
        self.sessions[handle.session_id] = handle
        if self.session_log_dir is not None:
            self.session_log_dir.mkdir(parents=True, exist_ok=True)
            handle.log_file = (self.session_log_dir / f"{handle.session_id}.log").open("a")
            handle.trace_file = (self.session_log_dir / f"{handle.session_id}.trace").open("a")
            handle.log_file.write(LOG_SCHEMA + "\n")
            handle.trace_file.write(TRACE_SCHEMA + "\n")
            for entry in state.log:
                handle.log_file.write(format_log_entry(entry) + "\n")
            handle.log_file.flush()
        handle.ticker = asyncio.create_task(self._tick_loop(handle))
        log.info("session %s created", handle.session_id)
        return handle

    def drop_session(self, handle: SessionHandle) -> None:
        self.sessions.pop(handle.session_id, None)
        for task in (handle.ticker, handle.reaper):
            if task is not None:
                task.cancel()
        for stream in (handle.log_file, handle.trace_file):
            if stream is not None:
                stream.close()
        log.info("session %s dropped", handle.session_id)

    async def _tick_loop(self, handle: SessionHandle) -> None:
        try:
            while handle.state.status == RUNNING:
                await asyncio.sleep(self.tick_ms / 1000.0)
                if handle.state.status != RUNNING:
                    break
                await self.apply_event(handle, Tick(handle.state.clock + 1))
        except asyncio.CancelledError:
            pass

    # -- event processing ------------------------------------------------------

    async def apply_event(self, handle: SessionHandle,
                          event: Event | Callable[[int], Event]) -> list:
        async with handle.lock:
            if callable(event):
                # client frames take their timestamp under the lock so a
                # concurrent tick cannot make them stale
                event = event(handle.state.clock)
            _, new_entries = handle_event(handle.state, event)
            handle.recorded.append(event)
            if handle.trace_file is not None:
                handle.trace_file.write(format_event(event) + "\n")
                handle.trace_file.flush()
            if handle.log_file is not None:
                for entry in new_entries:
                    handle.log_file.write(format_log_entry(entry) + "\n")
                handle.log_file.flush()
            update = self.make_update(handle, new_entries)
        self.broadcast(handle, update)
        return new_entries

    def broadcast(self, handle: SessionHandle, frame: dict) -> None:
        for queue in list(handle.queues):
            queue.put_nowait(frame)

    # -- frames ----------------------------------------------------------------

    def make_update(self, handle: SessionHandle, entries) -> dict:
        state = handle.state
        degrees = {
            var_id: {**vec.degrees, "NOTP": vec.notp}
            for var_id, vec in state.variable_state.items()
        }
        return {
            "schema_version": SCHEMA_VERSION,
            "type": "update",
            "session_id": handle.session_id,
            "status": state.status,
            "scene": state.scene_id,
            "step": state.step_id,
            "clock": state.clock,
            "entries": [_entry_dict(e) for e in entries],
            "degrees": degrees,
            "block_notp": state.notp_degree_now(),
            "agents": self._agent_snapshot(handle),
            "matrix": _matrix_snapshot(state),
        }

    def _agent_snapshot(self, handle: SessionHandle) -> dict:
        state = handle.state
        if not handle.networks:
            return {}
        relevances = agent_layer.sync_plot_goal(state, handle.networks)
        truths = _world_truths(state)
        snapshot = {}
        for character, network in handle.networks.items():
            agent_layer.spread_activation(network, relevances, truths)
            chosen = agent_layer.select_behavior(network, world_truths=truths)
            snapshot[character] = {
                "selected": chosen.id if chosen else None,
                "payload": list(network.payload(chosen)) if chosen else [],
                "activations": dict(network.activations),
            }
        return snapshot

    def hello_frame(self, handle: SessionHandle) -> dict:
        state = handle.state
        return {
            "schema_version": SCHEMA_VERSION,
            "type": "hello",
            "session_id": handle.session_id,
            "title": self.doc.title,
            "status": state.status,
            "scene": state.scene_id,
            "step": state.step_id,
            "clock": state.clock,
            "log_length": len(state.log),
            "variables": {
                d.variable.id: list(d.variable.term_ids()) for d in self.doc.variables
            },
            "tick_ms": self.tick_ms,
        }


def _matrix_snapshot(state: SessionState) -> dict | None:
    """Live cell scores while a matrix directive is listening, else None."""
    ctx = state.matrix_ctx
    if ctx is None:
        return None
    from .matrix import evaluate_matrix

    row = state._vector_or_silence(ctx.matrix.row_variable)
    col = state._vector_or_silence(ctx.matrix.col_variable)
    cells = evaluate_matrix(ctx.matrix, row, col)
    return {
        "id": ctx.matrix.id,
        "row_variable": ctx.matrix.row_variable,
        "col_variable": ctx.matrix.col_variable,
        "rows": list(ctx.matrix.row_labels()),
        "cols": list(ctx.matrix.col_labels()),
        "cells": [
            {"row": c.row_term, "col": c.col_term, "score": c.score,
             "actions": sorted(c.actions.actions)}
            for c in cells
        ],
    }


def _entry_dict(entry) -> dict:
    return {
        "t": entry.t,
        "seq": entry.seq,
        "action": entry.action_id,
        "by": entry.performer,
        "cause": entry.cause.kind,
        "src": entry.cause.detail,
        "deg": {label: value for label, value in entry.degrees},
        "line": format_log_entry(entry),
    }


def _world_truths(state: SessionState) -> dict[str, float]:
    truths: dict[str, float] = {}
    for (subject, predicate), value in state.world.facts.items():
        if value is True:
            rendered = "true"
        elif value is False:
            rendered = "false"
        else:
            rendered = str(value)
        truths[f"{subject}.{predicate}={rendered}"] = 1.0
    return truths


def _error_frame(code: str, message: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "type": "error",
            "code": code, "message": message}


def _parse_event_frame(data: dict) -> Callable[[int], Event]:
    kind = data.get("kind")
    if kind == "utterance":
        text = data.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ValueError("utterance frame needs non-empty text")
        return lambda t: Utterance(t, text)
    if kind == "intensity":
        variable = data.get("variable")
        x = data.get("x")
        if not isinstance(variable, str) or not isinstance(x, (int, float)):
            raise ValueError("intensity frame needs variable and numeric x")
        return lambda t: Intensity(t, variable, float(x))
    if kind == "move":
        zone = data.get("zone")
        if not isinstance(zone, str) or not zone:
            raise ValueError("move frame needs a zone tag")
        return lambda t: Move(t, zone)
    if kind == "tick":
        raise ValueError("ticks are injected by the server, not clients")
    raise ValueError(f"unknown event kind {kind!r}")


# ---------------------------------------------------------------------------
# HTTP layer


def create_app(host: SessionHost) -> web.Application:
    app = web.Application()
    app[HOST_KEY] = host
    app.router.add_post("/sessions", _create_session)
    app.router.add_get("/sessions/{sid}/play", _play)
    app.router.add_get("/sessions/{sid}/log", _get_log)
    app.router.add_get("/sessions/{sid}/trace", _get_trace)
    return app


async def _create_session(request: web.Request) -> web.Response:
    host: SessionHost = request.app[HOST_KEY]
    seed = 0
    if request.can_read_body:
        try:
            body = await request.json()
            seed = int(body.get("seed", 0))
        except (json.JSONDecodeError, ValueError, AttributeError):
            return web.json_response(
                _error_frame("bad-json", "body must be a JSON object"), status=400)
    handle = host.create_session(seed)
    return web.json_response({
        "schema_version": SCHEMA_VERSION,
        "session_id": handle.session_id,
        "status": handle.state.status,
    })


def _find(request: web.Request) -> SessionHandle | None:
    host: SessionHost = request.app[HOST_KEY]
    return host.sessions.get(request.match_info["sid"])


async def _get_log(request: web.Request) -> web.Response:
    handle = _find(request)
    if handle is None:
        return web.json_response(_error_frame("unknown-session", "no such session"),
                                 status=404)
    from .tracefile import format_log
    return web.Response(text=format_log(handle.state.log), content_type="text/plain")


async def _get_trace(request: web.Request) -> web.Response:
    handle = _find(request)
    if handle is None:
        return web.json_response(_error_frame("unknown-session", "no such session"),
                                 status=404)
    from .tracefile import format_trace
    return web.Response(text=format_trace(handle.recorded), content_type="text/plain")


async def _play(request: web.Request) -> web.WebSocketResponse:
    host: SessionHost = request.app[HOST_KEY]
    handle = _find(request)
    ws = web.WebSocketResponse()
    await ws.prepare(request)
    if handle is None:
        await ws.send_json(_error_frame("unknown-session", "no such session"))
        await ws.close()
        return ws

    if handle.reaper is not None:
        handle.reaper.cancel()
        handle.reaper = None

    queue: asyncio.Queue = asyncio.Queue()
    handle.queues.append(queue)
    sender = asyncio.create_task(_drain(ws, queue))
    await ws.send_json(host.hello_frame(handle))

    try:
        async for message in ws:
            if message.type != WSMsgType.TEXT:
                continue
            try:
                data = json.loads(message.data)
                if not isinstance(data, dict):
                    raise ValueError("frame must be a JSON object")
                make_event = _parse_event_frame(data)
            except (json.JSONDecodeError, ValueError) as exc:
                await ws.send_json(_error_frame("bad-frame", str(exc)))
                continue
            try:
                await host.apply_event(handle, make_event)
            except SessionEnded:
                await ws.send_json(_error_frame("session-ended", "the story is over"))
            except StaleEvent as exc:
                await ws.send_json(_error_frame("stale-event", str(exc)))
            except DramaError as exc:
                await ws.send_json(_error_frame("engine-error", str(exc)))
    finally:
        sender.cancel()
        if queue in handle.queues:
            handle.queues.remove(queue)
        if not handle.queues and handle.session_id in host.sessions:
            handle.reaper = asyncio.create_task(_reap(host, handle))
    return ws


async def _drain(ws: web.WebSocketResponse, queue: asyncio.Queue) -> None:
    try:
        while True:
            frame = await queue.get()
            await ws.send_json(frame)
    except (asyncio.CancelledError, ConnectionError):
        pass


async def _reap(host: SessionHost, handle: SessionHandle) -> None:
    try:
        await asyncio.sleep(host.grace_s)
        if not handle.queues:
            host.drop_session(handle)
    except asyncio.CancelledError:
        pass


def serve_sessions(doc: ScriptDoc, host: str = "127.0.0.1", port: int = 8750,
                   tick_ms: int = 1000, config: RuntimeConfig | None = None,
                   session_log_dir: Path | None = None,
                   verbosity: str = "info") -> None:
    """Run the service until interrupted."""
    logging.basicConfig(level=getattr(logging, verbosity.upper(), logging.INFO))
    session_host = SessionHost(doc, config=config, tick_ms=tick_ms,
                               session_log_dir=session_log_dir)
    app = create_app(session_host)
    log.info("serving %r on %s:%s (tick %sms)", doc.title or "script", host, port, tick_ms)
    web.run_app(app, host=host, port=port)
