"""Participant events consumed by a running session.

Time is integer ticks supplied by the event source, never wall clock; the
service layer maps real time onto Tick events so batch replay and live play
share one semantics.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tick:
    """Time passing with no participant activity."""

    t: int


@dataclass(frozen=True)
class Utterance:
    """Transcribed participant speech."""

    t: int
    text: str


@dataclass(frozen=True)
class Intensity:
    """A sensed or self-reported reading for one linguistic variable."""

    t: int
    variable_id: str
    x: float


@dataclass(frozen=True)
class Move:
    """The participant moved to a named zone."""

    t: int
    zone: str


Event = Tick | Utterance | Intensity | Move
