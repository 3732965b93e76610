"""Deterministic event-driven execution of a validated script.

A session walks scene steps in order.  Stated actions execute on entry; a
rule block stops the walk and listens.  Each incoming event is fuzzified,
the active block's rules are scored against it, and every rule at or above
the firing threshold fires in declaration order; the first fired rule's
control directive moves the state machine.  When nothing fires, the block's
NOTP fallback guarantees the story still advances: immediately, or after a
configured stretch of inactivity.

Identical (script, trace, config, seed) inputs always produce byte-identical
action logs.  One session must be driven from one thread at a time; distinct
sessions share nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import (
    DramaError,
    InvalidScript,
    SessionEnded,
    StaleEvent,
    UnmetPrecondition,
)
from .events import Event, Intensity, Move, Tick, Utterance
from .fuzzy import DegreeVector, fuzzify, notp_degree
from .intent import intent_degrees
from .matrix import DecisionMatrix, apply_overrides, evaluate_matrix, select_actions
from .model import (
    ActionDef,
    EndMarker,
    Fact,
    IntentCondition,
    MatrixDirective,
    NotpCondition,
    Rule,
    RuleBlock,
    Scene,
    SceneStep,
    ScriptDoc,
    StateCondition,
    StatedAction,
    TimeoutCondition,
    VariableTermCondition,
)
from .validate import validate_script

RUNNING = "running"
ENDED = "ended"

# Hard cap on step transitions per event; a control-flow cycle of stated-only
# steps would otherwise spin forever inside one handle_event call.
_MAX_CHAIN = 1000


@dataclass(frozen=True)
class RuntimeConfig:
    """Tunable reactivity: firing threshold and fallback latency."""

    theta_fire: float = 0.5
    tau_notp: int = 10
    max_ticks: int = 100_000

    def __post_init__(self) -> None:
        if not 0.0 < self.theta_fire <= 0.5:
            raise ValueError(f"theta_fire must be in (0, 0.5], got {self.theta_fire}")
        if self.tau_notp < 1:
            raise ValueError(f"tau_notp must be >= 1, got {self.tau_notp}")


@dataclass(frozen=True)
class Cause:
    """Provenance of a log entry: why the engine performed the action."""

    kind: str  # stated | rule | notp | matrix | bracket-inserted | agent
    detail: str = ""


@dataclass(frozen=True)
class ActionLogEntry:
    t: int
    seq: int
    action_id: str
    performer: str
    cause: Cause
    degrees: tuple[tuple[str, float], ...] = ()


class WorldState:
    """Facts plus per-character stage presence and zone."""

    def __init__(self, participant: str):
        self.participant = participant
        self.facts: dict[tuple[str, str], object] = {}
        self.characters: dict[str, dict[str, object]] = {}
        self.ensure_character(participant, on_stage=True)

    def ensure_character(self, char_id: str, on_stage: bool = True, zone: str = "") -> None:
        self.characters.setdefault(char_id, {"on_stage": on_stage, "zone": zone})
        self.facts[(char_id, "on_stage")] = on_stage
        if zone:
            self.facts[(char_id, "zone")] = zone

    def set_fact(self, fact: Fact) -> None:
        self.facts[fact.key()] = fact.value
        if fact.subject in self.characters and fact.predicate in ("on_stage", "zone"):
            self.characters[fact.subject][fact.predicate] = fact.value

    def satisfies(self, fact: Fact) -> bool:
        return self.facts.get(fact.key()) == fact.value

    def holds(self, triple: tuple[str, str, object]) -> bool:
        subject, predicate, value = triple
        return self.facts.get((subject, predicate)) == value

    def apply_effects(self, action: ActionDef) -> None:
        for fact in action.effects:
            self.set_fact(fact)

    def snapshot(self) -> tuple:
        return (tuple(sorted((k, str(v)) for k, v in self.facts.items())),)


@dataclass
class _Frame:
    """One activation of a rule block on the listening stack."""

    block: RuleBlock
    path: str
    entered_at: int
    last_activity: int
    notp_fired: bool = False


@dataclass
class _MatrixContext:
    directive: MatrixDirective
    path: str
    activated_at: int
    matrix: DecisionMatrix


class SessionState:
    """Mutable state of one story run; drive it only through handle_event."""

    def __init__(self, doc: ScriptDoc, config: RuntimeConfig, seed: int):
        self.doc = doc
        self.config = config
        self.rng_seed = seed
        self.status = RUNNING
        self.clock = 0
        self.step_entered_at = 0
        self.scene_id = ""
        self.step_id = ""
        self.item_index = 0
        self.frames: list[_Frame] = []
        self.matrix_ctx: _MatrixContext | None = None
        self.world = WorldState(doc.participant)
        self.log: list[ActionLogEntry] = []
        self.variable_state: dict[str, DegreeVector] = {}
        self.last_block_scores: list[float] = []
        self._seq = 0
        self._actions = {a.id: a for a in doc.actions}
        self._lexicon = doc.lexicon()
        self._matrices: dict[str, DecisionMatrix] = {}
        self._incompats = {}
        for decl in doc.matrices:
            row_var = doc.variable(decl.row_variable)
            col_var = doc.variable(decl.col_variable)
            self._matrices[decl.id] = decl.build(row_var, col_var)
            self._incompats[decl.id] = decl.built_incompats()

    # -- plumbing ------------------------------------------------------------

    @property
    def fired_since_entry(self) -> bool:
        frame = self.active_frame
        return frame is not None and frame.last_activity > frame.entered_at

    @property
    def active_frame(self) -> _Frame | None:
        return self.frames[-1] if self.frames else None

    def notp_degree_now(self) -> float:
        """Complement of the best rule score seen on the last event in this block."""
        return notp_degree(self.last_block_scores)

    def current_scene(self) -> Scene:
        return self.doc.scene(self.scene_id)

    def current_step(self) -> SceneStep:
        return self.current_scene().step(self.step_id)

    def action_def(self, action_id: str) -> ActionDef:
        try:
            return self._actions[action_id]
        except KeyError:
            raise DramaError(f"unknown action {action_id!r}")

    def _emit(self, action_id: str, performer: str, cause: Cause,
              degrees: tuple[tuple[str, float], ...] = ()) -> ActionLogEntry:
        entry = ActionLogEntry(self.clock, self._seq, action_id, performer, cause, degrees)
        self._seq += 1
        self.log.append(entry)
        return entry

    def snapshot(self) -> tuple:
        return (self.scene_id, self.step_id, self.item_index, self.clock,
                self.status, self.world.snapshot(),
                tuple((e.t, e.seq, e.action_id, e.cause.kind) for e in self.log))

    # -- action execution ------------------------------------------------------

    def _execute_action(self, action_id: str, cause: Cause,
                        degrees: tuple[tuple[str, float], ...] = (),
                        brackets: list[ActionDef] | None = None) -> None:
        action = self.action_def(action_id)
        inserted = resolve_consistency(action, self.world, brackets or [])
        for bracket_id in inserted:
            bracket = self.action_def(bracket_id)
            self._emit(bracket_id, bracket.performer,
                       Cause("bracket-inserted", f"for:{action_id}"))
        self.world.apply_effects(action)
        self._emit(action_id, action.performer, cause, degrees)

    def _run_consequence(self, rule_actions, cause: Cause, degrees) -> None:
        brackets = [self.action_def(ref.action_id)
                    for ref in rule_actions if ref.bracketed]
        for ref in rule_actions:
            if ref.bracketed:
                continue
            self._execute_action(ref.action_id, cause, degrees, brackets)

    # -- step entry -------------------------------------------------------------

    def _enter_step(self, scene_id: str, step_id: str) -> None:
        if scene_id != self.scene_id:
            scene = self.doc.scene(scene_id)
            self.scene_id = scene_id
            self._emit("ambient", "", Cause("stated", scene.id))
        self.step_id = step_id
        self.step_entered_at = self.clock
        self.frames.clear()
        self.matrix_ctx = None
        self.last_block_scores = []
        self._walk_items(0)

    def _walk_items(self, start: int) -> None:
        """Run step items from ``start`` until something listens or the story ends."""
        chain_guard = 0
        scene = self.current_scene()
        step = self.current_step()
        index = start
        while self.status == RUNNING:
            if index >= len(step.items):
                nxt = self._following_step(scene, step)
                if nxt is None:
                    self.status = ENDED  # fell off the script; nothing left to play
                    return
                chain_guard += 1
                if chain_guard > _MAX_CHAIN:
                    raise DramaError("control flow loops through steps without listening")
                scene_id, step_id = nxt
                if scene_id != self.scene_id:
                    self.scene_id = scene_id
                    self._emit("ambient", "", Cause("stated", scene_id))
                self.step_id = step_id
                self.step_entered_at = self.clock
                scene = self.current_scene()
                step = self.current_step()
                index = 0
                continue
            self.item_index = index
            item = step.items[index]
            path = f"{scene.id}.{step.id}.i{index}"
            if isinstance(item, StatedAction):
                self._execute_action(item.ref.action_id, Cause("stated", path))
                index += 1
            elif isinstance(item, EndMarker):
                self._emit("END", "", Cause("stated", path))
                self.status = ENDED
                return
            elif isinstance(item, RuleBlock):
                self.frames.clear()
                self.frames.append(_Frame(item, path, self.clock, self.clock))
                self.last_block_scores = []
                return
            elif isinstance(item, MatrixDirective):
                ctx = _MatrixContext(item, path, self.clock, self._matrices[item.matrix_id])
                self.matrix_ctx = ctx
                if self._matrix_ready(ctx):
                    self._evaluate_matrix_ctx(ctx)
                    self.matrix_ctx = None
                    index += 1
                    continue
                return
            else:
                raise DramaError(f"unexpected step item {item!r}")

    def _following_step(self, scene: Scene, step: SceneStep) -> tuple[str, str] | None:
        steps = scene.steps
        pos = next(i for i, s in enumerate(steps) if s.id == step.id)
        if pos + 1 < len(steps):
            return (scene.id, steps[pos + 1].id)
        scenes = self.doc.scenes
        spos = next(i for i, s in enumerate(scenes) if s.id == scene.id)
        if spos + 1 < len(scenes):
            nxt = scenes[spos + 1]
            if nxt.steps:
                return (nxt.id, nxt.steps[0].id)
        return None

    # -- matrices ---------------------------------------------------------------

    def _matrix_ready(self, ctx: _MatrixContext) -> bool:
        return (ctx.matrix.row_variable in self.variable_state
                and ctx.matrix.col_variable in self.variable_state)

    def _vector_or_silence(self, variable_id: str) -> DegreeVector:
        if variable_id in self.variable_state:
            return self.variable_state[variable_id]
        variable = self.doc.variable(variable_id)
        return DegreeVector(variable_id, {t: 0.0 for t in variable.term_ids()}, 1.0)

    def _evaluate_matrix_ctx(self, ctx: _MatrixContext) -> None:
        row = self._vector_or_silence(ctx.matrix.row_variable)
        col = self._vector_or_silence(ctx.matrix.col_variable)
        cells = evaluate_matrix(ctx.matrix, row, col)
        selected = select_actions(cells, self.config.theta_fire)
        resolved = apply_overrides(selected, self._incompats[ctx.directive.matrix_id],
                                   self.world.holds)
        ordered: list[tuple[str, object]] = []
        emitted: set[str] = set()
        for cell in cells:
            if cell.score < self.config.theta_fire:
                continue
            for action_id in sorted(cell.actions.actions):
                if action_id in resolved and action_id not in emitted:
                    emitted.add(action_id)
                    ordered.append((action_id, cell))
        for action_id in sorted(resolved - emitted):
            best = max((c for c in cells if c.score >= self.config.theta_fire),
                       key=lambda c: c.score)
            ordered.append((action_id, best))
        for action_id, cell in ordered:
            degrees = (
                (f"{ctx.matrix.row_variable}:{cell.row_term}", row.degree(cell.row_term)),
                (f"{ctx.matrix.col_variable}:{cell.col_term}", col.degree(cell.col_term)),
            )
            detail = f"{ctx.matrix.id}[{cell.row_term},{cell.col_term}]"
            self._execute_action(action_id, Cause("matrix", detail), degrees)


def start_session(script: ScriptDoc, config: RuntimeConfig | None = None,
                  seed: int = 0) -> SessionState:
    """Validate the script and position a fresh session at its first step."""
    config = config or RuntimeConfig()
    report = validate_script(script)
    if not report.ok:
        raise InvalidScript(
            "script has validation errors:\n" + "\n".join(
                f.as_line() for f in report.errors())
        )
    state = SessionState(script, config, seed)
    for c in script.characters:
        state.world.ensure_character(c.id, c.on_stage, c.zone)
        for fact in c.facts:
            state.world.set_fact(fact)
    for p in script.props:
        for fact in p.facts:
            state.world.set_fact(fact)
    state.world.ensure_character(script.participant, on_stage=True)
    first_scene = script.scenes[0]
    state.scene_id = first_scene.id
    state._emit("ambient", "", Cause("stated", first_scene.id))
    state.step_id = first_scene.steps[0].id
    state.step_entered_at = 0
    state._walk_items(0)
    return state


def resolve_consistency(action: ActionDef, world: WorldState,
                        brackets: list[ActionDef]) -> list[str]:
    """Insert bracketed actions needed to establish the action's preconditions.

    Returns the inserted action ids in execution order, applying their effects
    to the world as they run.  Raises UnmetPrecondition when no bracketed
    action can establish a missing fact: that is a script bug, not an engine
    condition.
    """
    inserted: list[str] = []
    _resolve(action, world, brackets, inserted, set())
    return inserted


def _resolve(action: ActionDef, world: WorldState, brackets: list[ActionDef],
             inserted: list[str], resolving: set[str]) -> None:
    for pre in action.preconditions:
        if world.satisfies(pre):
            continue
        candidate = None
        for bracket in brackets:
            if bracket.id in resolving:
                continue
            if any(effect == pre for effect in bracket.effects):
                candidate = bracket
                break
        if candidate is None:
            raise UnmetPrecondition(action.id, pre)
        resolving.add(candidate.id)
        _resolve(candidate, world, brackets, inserted, resolving)
        world.apply_effects(candidate)
        inserted.append(candidate.id)
        resolving.discard(candidate.id)


# ---------------------------------------------------------------------------
# Event handling


def handle_event(state: SessionState, event: Event) -> tuple[SessionState, list[ActionLogEntry]]:
    """Advance the session by one event; returns the state and new log entries."""
    if state.status == ENDED:
        raise SessionEnded(f"session already ended, cannot accept event at t={event.t}")
    if event.t < state.clock:
        raise StaleEvent(f"event at t={event.t} is older than the clock ({state.clock})")
    mark = len(state.log)
    state.clock = event.t

    if isinstance(event, Intensity):
        variable = _declared_variable(state, event.variable_id)
        state.variable_state[event.variable_id] = fuzzify(variable, event.x)
    elif isinstance(event, Move):
        state.world.set_fact(Fact(state.doc.participant, "zone", event.zone))

    if state.matrix_ctx is not None:
        _advance_matrix(state, event)
    elif state.active_frame is not None:
        _advance_block(state, event)

    return state, state.log[mark:]


def _declared_variable(state: SessionState, variable_id: str):
    try:
        return state.doc.variable(variable_id)
    except KeyError:
        raise DramaError(f"intensity event names undeclared variable {variable_id!r}")


def _advance_matrix(state: SessionState, event: Event) -> None:
    ctx = state.matrix_ctx
    assert ctx is not None
    timed_out = (isinstance(event, Tick)
                 and state.clock - ctx.activated_at >= state.config.tau_notp)
    if state._matrix_ready(ctx) or timed_out:
        state.matrix_ctx = None
        state._evaluate_matrix_ctx(ctx)
        if state.status == RUNNING:
            state._walk_items(state.item_index + 1)


def _score_rule(state: SessionState, frame: _Frame, rule: Rule, event: Event,
                says: dict[str, float] | None) -> tuple[float, tuple[tuple[str, float], ...]]:
    cond = rule.condition
    if isinstance(cond, IntentCondition):
        degree = (says or {}).get(cond.intent_id, 0.0)
        return degree, ((f"says:{cond.intent_id}", degree),)
    if isinstance(cond, VariableTermCondition):
        degree = 0.0
        if isinstance(event, Intensity) and event.variable_id == cond.variable_id:
            vector = state.variable_state[cond.variable_id]
            degree = vector.degree(cond.term_id)
        return degree, ((f"{cond.variable_id}:{cond.term_id}", degree),)
    if isinstance(cond, TimeoutCondition):
        degree = 1.0 if (isinstance(event, Tick)
                         and state.clock - frame.entered_at >= cond.ticks) else 0.0
        return degree, (("timeout", degree),)
    if isinstance(cond, StateCondition):
        degree = 1.0 if state.world.satisfies(cond.fact) else 0.0
        label = f"state:{cond.fact.subject}.{cond.fact.predicate}"
        return degree, ((label, degree),)
    raise DramaError(f"cannot score condition {cond!r}")


def _advance_block(state: SessionState, event: Event) -> None:
    frame = state.active_frame
    assert frame is not None
    block = frame.block
    says = intent_degrees(event.text, state._lexicon) if isinstance(event, Utterance) else None

    scored: list[tuple[Rule, int, float, tuple]] = []
    for ridx, rule in enumerate(block.rules):
        degree, snapshot = _score_rule(state, frame, rule, event, says)
        scored.append((rule, ridx, degree, snapshot))
    state.last_block_scores = [degree for _, _, degree, _ in scored]

    fired = [(rule, ridx, degree, snap) for rule, ridx, degree, snap in scored
             if degree >= state.config.theta_fire]
    if fired:
        frame.last_activity = state.clock
        control_rule = None
        for rule, ridx, degree, snap in fired:
            cause = Cause("rule", f"{frame.path}.r{ridx}")
            state._run_consequence(rule.consequence.actions, cause, snap)
            if control_rule is None:
                control_rule = rule
        assert control_rule is not None
        _apply_control(state, control_rule)
        return

    mode = block.notp_mode
    if frame.notp_fired or block.notp_rule is None:
        return
    if mode.kind == "immediate":
        _fire_notp(state, frame, scored)
        return
    tau = mode.ticks if mode.kind == "after" else state.config.tau_notp
    if isinstance(event, Tick):
        idle_since = max(frame.entered_at, frame.last_activity)
        if state.clock - idle_since >= tau:
            _fire_notp(state, frame, scored)


def _fire_notp(state: SessionState, frame: _Frame, scored) -> None:
    block = frame.block
    rule = block.notp_rule
    assert rule is not None
    frame.notp_fired = True
    degree = notp_degree([d for _, _, d, _ in scored])
    cause = Cause("notp", frame.path)
    state._run_consequence(rule.consequence.actions, cause, (("notp", degree),))
    _apply_control(state, rule)


def _apply_control(state: SessionState, rule: Rule) -> None:
    cons = rule.consequence
    if cons.nested is not None:
        parent = state.active_frame
        assert parent is not None
        path = f"{parent.path}.r{_rule_index(parent.block, rule)}"
        state.frames.append(_Frame(cons.nested, path, state.clock, state.clock))
        state.last_block_scores = []
        return
    kind = cons.control.kind
    if kind in ("stay", "wait"):
        return
    if kind == "continue":
        if len(state.frames) > 1:
            state.frames.pop()
            returned = state.active_frame
            assert returned is not None
            returned.last_activity = state.clock
            returned.notp_fired = False
            state.last_block_scores = []
            return
        state.frames.clear()
        state._walk_items(state.item_index + 1)
        return
    if kind == "next":
        state.frames.clear()
        state._walk_items(state.item_index + 1)
        return
    if kind == "goto":
        target = cons.control.target or ""
        resolved = _resolve_goto_target(state, target)
        state.frames.clear()
        state._enter_step(*resolved)
        return
    if kind == "end":
        state.frames.clear()
        state.status = ENDED
        return
    raise DramaError(f"unexpected control {cons.control!r}")


def _rule_index(block: RuleBlock, rule: Rule) -> int:
    for idx, candidate in enumerate(block.all_rules()):
        if candidate is rule:
            return idx
    raise DramaError("rule does not belong to the active block")


def _resolve_goto_target(state: SessionState, target: str) -> tuple[str, str]:
    scene = state.current_scene()
    for step in scene.steps:
        if step.id == target:
            return (scene.id, step.id)
    if "." in target:
        scene_id, _, step_id = target.partition(".")
        try:
            other = state.doc.scene(scene_id)
            other.step(step_id)
            return (scene_id, step_id)
        except KeyError:
            pass
    raise DramaError(f"GOTO target {target!r} does not exist")


def run_trace(script: ScriptDoc, trace: list[Event],
              config: RuntimeConfig | None = None, seed: int = 0) -> list[ActionLogEntry]:
    """Play a recorded event stream; stops at END, exhaustion, or max_ticks."""
    config = config or RuntimeConfig()
    state = start_session(script, config, seed)
    for index, event in enumerate(trace):
        if state.status == ENDED:
            break
        if event.t > config.max_ticks:
            break
        try:
            handle_event(state, event)
        except DramaError as exc:
            exc.event_index = index  # type: ignore[attr-defined]
            raise
    return state.log
