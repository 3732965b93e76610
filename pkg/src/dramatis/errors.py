"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class DramaError(Exception):
    """Base class for every error this package raises on purpose."""


class ParseError(DramaError):
    """Script text could not be turned into a model.

    Carries the 1-based source line and column plus a stable machine code
    such as "MissingNotp", "DuplicateId", "UnknownKeyword", "DanglingIndent"
    or plain "Syntax".
    """

    def __init__(self, message: str, line: int, column: int = 1, code: str = "Syntax"):
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line
        self.column = column
        self.code = code


class InvalidScript(DramaError):
    """A session was started from a script that has validation errors."""


class SessionEnded(DramaError):
    """An event arrived after the story finished."""


class StaleEvent(DramaError):
    """An event carries a timestamp earlier than the session clock."""


class UnmetPrecondition(DramaError):
    """An action's precondition could not be established, a script bug.

    The consequence offered no bracketed action whose effects supply the
    missing fact.
    """

    def __init__(self, action_id: str, fact: object):
        super().__init__(f"action {action_id!r} requires {fact} which nothing establishes")
        self.action_id = action_id
        self.fact = fact
