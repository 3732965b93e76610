"""Line-oriented trace and action-log formats.

Both formats are versioned and byte-deterministic so recorded sessions can be
replayed and diffed against golden files.

Trace lines:   ``<t> TICK`` | ``<t> SAY <text>`` | ``<t> INT <var> <x>`` |
``<t> MOVE <zone>``.  Log lines are space-separated key=value fields with a
fixed field order; degrees print with four decimals.
"""

from __future__ import annotations

from pathlib import Path

from .errors import DramaError
from .events import Event, Intensity, Move, Tick, Utterance

TRACE_SCHEMA = "schema=drama-trace/1"
LOG_SCHEMA = "schema=drama-log/1"


class TraceFormatError(DramaError):
    def __init__(self, message: str, line: int):
        super().__init__(f"trace line {line}: {message}")
        self.line = line


def parse_trace(text: str) -> list[Event]:
    """Read events from trace text; events must be time-ordered."""
    events: list[Event] = []
    last_t = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line == TRACE_SCHEMA:
            continue
        parts = line.split(None, 2)
        if len(parts) < 2:
            raise TraceFormatError(f"malformed event {line!r}", lineno)
        try:
            t = int(parts[0])
        except ValueError:
            raise TraceFormatError(f"bad tick {parts[0]!r}", lineno)
        if t < last_t:
            raise TraceFormatError(f"event at t={t} goes back in time", lineno)
        last_t = t
        kind = parts[1]
        payload = parts[2] if len(parts) > 2 else ""
        if kind == "TICK":
            if payload:
                raise TraceFormatError("TICK takes no payload", lineno)
            events.append(Tick(t))
        elif kind == "SAY":
            events.append(Utterance(t, payload))
        elif kind == "MOVE":
            if not payload or " " in payload:
                raise TraceFormatError("MOVE takes one zone tag", lineno)
            events.append(Move(t, payload))
        elif kind == "INT":
            tokens = payload.split()
            if len(tokens) != 2:
                raise TraceFormatError("INT takes <variable> <value>", lineno)
            try:
                x = float(tokens[1])
            except ValueError:
                raise TraceFormatError(f"bad intensity {tokens[1]!r}", lineno)
            events.append(Intensity(t, tokens[0], x))
        else:
            raise TraceFormatError(f"unknown event kind {kind!r}", lineno)
    return events


def format_event(event: Event) -> str:
    if isinstance(event, Tick):
        return f"{event.t} TICK"
    if isinstance(event, Utterance):
        return f"{event.t} SAY {event.text}"
    if isinstance(event, Move):
        return f"{event.t} MOVE {event.zone}"
    if isinstance(event, Intensity):
        return f"{event.t} INT {event.variable_id} {event.x!r}"
    raise TypeError(f"unexpected event {event!r}")


def format_trace(events: list[Event]) -> str:
    lines = [TRACE_SCHEMA] + [format_event(e) for e in events]
    return "\n".join(lines) + "\n"


def load_trace(path: str | Path) -> list[Event]:
    return parse_trace(Path(path).read_text(encoding="utf-8"))


def format_log_entry(entry) -> str:
    fields = [f"t={entry.t}", f"seq={entry.seq}", f"cause={entry.cause.kind}",
              f"action={entry.action_id}"]
    if entry.performer:
        fields.append(f"by={entry.performer}")
    if entry.cause.detail:
        fields.append(f"src={entry.cause.detail}")
    if entry.degrees:
        pairs = ",".join(f"{label}={value:.4f}" for label, value in entry.degrees)
        fields.append(f"deg={pairs}")
    return " ".join(fields)


def format_log(entries) -> str:
    lines = [LOG_SCHEMA] + [format_log_entry(e) for e in entries]
    return "\n".join(lines) + "\n"
