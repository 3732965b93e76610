"""Interactive-drama engine.

Scripts are scene-step state machines whose rules are fuzzy conditions under
a possibility/necessity calculus; every rule block ends in a NOTP fallback so
the story advances even when the participant does nothing.  The package
parses and validates the .drama script format, executes sessions
deterministically from event traces or live input, crosses linguistic
variables in fuzzy decision matrices, matches utterances to intents, and
animates side characters with small behavior networks.
"""

from .errors import (
    DramaError,
    InvalidScript,
    ParseError,
    SessionEnded,
    StaleEvent,
    UnmetPrecondition,
)
from .events import Event, Intensity, Move, Tick, Utterance
from .fuzzy import (
    NOTP,
    DegreeVector,
    LinguisticVariable,
    PiecewiseLinear,
    PossibilityPair,
    Term,
    check_consistency_bounds,
    combine_max,
    combine_min,
    fuzzify,
    membership_degree,
    necessity_from,
    notp_degree,
)
from .intent import ACCEPT_THRESHOLD, Intent, Lexicon, MatchResult, match_intent, normalize
from .matrix import (
    ActionSet,
    DecisionMatrix,
    IncompatibilityDecl,
    ScoredCell,
    VariableMismatch,
    apply_overrides,
    detect_incompatibilities,
    evaluate_matrix,
    select_actions,
)
from .model import ScriptDoc
from .parser import parse_script, parse_script_file
from .runtime import (
    ActionLogEntry,
    RuntimeConfig,
    SessionState,
    WorldState,
    handle_event,
    resolve_consistency,
    run_trace,
    start_session,
)
from .serialize import canonical_serialize
from .tracefile import format_log, format_trace, load_trace, parse_trace
from .validate import ValidationReport, validate_script

__version__ = "0.1.0"

__all__ = [
    "ACCEPT_THRESHOLD",
    "ActionLogEntry",
    "ActionSet",
    "DecisionMatrix",
    "DegreeVector",
    "DramaError",
    "Event",
    "Intensity",
    "Intent",
    "IncompatibilityDecl",
    "InvalidScript",
    "Lexicon",
    "LinguisticVariable",
    "MatchResult",
    "Move",
    "NOTP",
    "ParseError",
    "PiecewiseLinear",
    "PossibilityPair",
    "RuntimeConfig",
    "ScoredCell",
    "ScriptDoc",
    "SessionEnded",
    "SessionState",
    "StaleEvent",
    "Term",
    "Tick",
    "UnmetPrecondition",
    "Utterance",
    "ValidationReport",
    "VariableMismatch",
    "WorldState",
    "apply_overrides",
    "canonical_serialize",
    "check_consistency_bounds",
    "combine_max",
    "combine_min",
    "detect_incompatibilities",
    "evaluate_matrix",
    "format_log",
    "format_trace",
    "fuzzify",
    "handle_event",
    "load_trace",
    "match_intent",
    "membership_degree",
    "necessity_from",
    "normalize",
    "notp_degree",
    "parse_script",
    "parse_script_file",
    "parse_trace",
    "resolve_consistency",
    "run_trace",
    "select_actions",
    "start_session",
    "validate_script",
]
