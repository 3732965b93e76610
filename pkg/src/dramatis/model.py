"""Abstract model of an interactive-drama script.

A script is a set of declarations (characters, props, variables, matrices,
lexicon, actions, agents) plus ordered scenes.  Each scene is a list of steps;
a step is the unit of state in the story's finite state machine and holds an
ordered list of items: unconditional stated actions, rule blocks listening
for participant events, matrix directives, and at most one END marker.

Line numbers never participate in equality so a reparsed canonical dump
compares equal to the original model.  Standalone script comments attach to
the nearest preceding node; inline comments live on the rule they annotate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fuzzy import NOTP, LinguisticVariable
from .intent import Intent, Lexicon
from .matrix import ActionSet, DecisionMatrix, IncompatibilityDecl

FactValue = bool | str


@dataclass(frozen=True)
class Fact:
    """One (subject, predicate) = value statement about the world."""

    subject: str
    predicate: str
    value: FactValue = True

    def key(self) -> tuple[str, str]:
        return (self.subject, self.predicate)


@dataclass(frozen=True)
class ActionRef:
    """Reference to an action; bracketed refs run only when needed for consistency."""

    action_id: str
    bracketed: bool = False


# ---------------------------------------------------------------------------
# Conditions


@dataclass(frozen=True)
class IntentCondition:
    intent_id: str


@dataclass(frozen=True)
class VariableTermCondition:
    variable_id: str
    term_id: str


@dataclass(frozen=True)
class TimeoutCondition:
    ticks: int


@dataclass(frozen=True)
class StateCondition:
    fact: Fact


@dataclass(frozen=True)
class NotpCondition:
    pass


Condition = (
    IntentCondition
    | VariableTermCondition
    | TimeoutCondition
    | StateCondition
    | NotpCondition
)


# ---------------------------------------------------------------------------
# Control flow


@dataclass(frozen=True)
class Control:
    """What happens after a consequence runs.

    kinds: "next" leaves the whole rule structure and resumes with the step
    items after it (falling through to the next step when none remain);
    "continue" pops one block level; "stay" keeps listening ("wait" is stay
    with no actions); "goto" jumps to a step; "end" finishes the session.
    """

    kind: str
    target: str | None = None


NEXT_STEP = Control("next")
CONTINUE = Control("continue")
STAY = Control("stay")
WAIT = Control("wait")
END = Control("end")


def goto(step_id: str) -> Control:
    return Control("goto", step_id)


# ---------------------------------------------------------------------------
# Rules and blocks


@dataclass
class Consequence:
    actions: tuple[ActionRef, ...] = ()
    control: Control = STAY
    nested: RuleBlock | None = None


@dataclass
class Rule:
    condition: Condition
    consequence: Consequence
    inline_comment: str | None = None
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)

    def is_notp(self) -> bool:
        return isinstance(self.condition, NotpCondition)


@dataclass(frozen=True)
class NotpMode:
    """When the block's NOTP fallback fires.

    "immediate": on the first event no sibling rule fires for.
    "after": on the first tick after ``ticks`` of inactivity.
    "default": like "after" with the runtime-configured latency.
    """

    kind: str = "default"
    ticks: int | None = None


NOTP_DEFAULT = NotpMode()
NOTP_IMMEDIATE = NotpMode("immediate")


def notp_after(ticks: int) -> NotpMode:
    return NotpMode("after", ticks)


@dataclass
class RuleBlock:
    """A listening context: ordered rules terminated by exactly one NOTP rule."""

    rules: list[Rule] = field(default_factory=list)
    notp_rule: Rule | None = None
    notp_mode: NotpMode = NOTP_DEFAULT
    nesting_depth: int = 1
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)

    def all_rules(self) -> list[Rule]:
        return self.rules + ([self.notp_rule] if self.notp_rule else [])


# ---------------------------------------------------------------------------
# Step items


@dataclass
class StatedAction:
    ref: ActionRef
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class MatrixDirective:
    matrix_id: str
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class EndMarker:
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


StepItem = StatedAction | RuleBlock | MatrixDirective | EndMarker


@dataclass
class SceneStep:
    id: str
    items: list[StepItem] = field(default_factory=list)
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class Scene:
    id: str
    ambient: str = ""
    steps: list[SceneStep] = field(default_factory=list)
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)

    def step(self, step_id: str) -> SceneStep:
        for s in self.steps:
            if s.id == step_id:
                return s
        raise KeyError(step_id)


# ---------------------------------------------------------------------------
# Declarations


@dataclass
class CharacterDecl:
    id: str
    on_stage: bool = True
    zone: str = ""
    facts: tuple[Fact, ...] = ()
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class PropDecl:
    id: str
    facts: tuple[Fact, ...] = ()
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class ActionDef:
    id: str
    performer: str
    description: str = ""
    preconditions: tuple[Fact, ...] = ()
    effects: tuple[Fact, ...] = ()
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class VarDecl:
    variable: LinguisticVariable
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class IntentDecl:
    intent: Intent
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class MatrixRow:
    label: str
    cells: tuple[tuple[str, ...], ...]
    line: int = field(default=0, compare=False)


@dataclass
class IncompatDecl:
    first: str
    second: str
    when: Fact | None = None
    override: tuple[str, ...] = ()
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)

    def build(self) -> IncompatibilityDecl:
        when = None
        if self.when is not None:
            when = (self.when.subject, self.when.predicate, self.when.value)
        override = ActionSet.of(*self.override) if self.override else None
        return IncompatibilityDecl(frozenset({self.first, self.second}), when, override)


@dataclass
class MatrixDecl:
    """Authored matrix table; may be incomplete until validated.

    ``build`` raises ValueError when the table is not total, so call it only
    after validation reported no IncompleteMatrix finding.
    """

    id: str
    row_variable: str
    col_variable: str
    rows: list[MatrixRow] = field(default_factory=list)
    incompats: list[IncompatDecl] = field(default_factory=list)
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)

    def build(self, row_var: LinguisticVariable, col_var: LinguisticVariable) -> DecisionMatrix:
        row_terms = row_var.term_ids()
        col_terms = col_var.term_ids()
        cells: dict[tuple[str, str], ActionSet] = {}
        for row in self.rows:
            for col_label, actions in zip(col_terms + (NOTP,), row.cells):
                if actions:
                    cells[(row.label, col_label)] = ActionSet.of(*actions)
        return DecisionMatrix(self.id, self.row_variable, self.col_variable,
                              row_terms, col_terms, cells)

    def built_incompats(self) -> list[IncompatibilityDecl]:
        return [d.build() for d in self.incompats]


@dataclass
class GoalDecl:
    id: str
    condition: str
    importance: float = 0.5
    relevance: float = 0.5
    line: int = field(default=0, compare=False)


@dataclass
class ModuleDecl:
    id: str
    action_id: str
    preconditions: tuple[str, ...] = ()
    effects: tuple[tuple[str, float], ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class AgentDecl:
    character: str
    goals: list[GoalDecl] = field(default_factory=list)
    modules: list[ModuleDecl] = field(default_factory=list)
    comments: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)


# ---------------------------------------------------------------------------
# Document


DEFAULT_PARTICIPANT = "participant"


@dataclass
class ScriptDoc:
    title: str = ""
    participant: str = DEFAULT_PARTICIPANT
    characters: list[CharacterDecl] = field(default_factory=list)
    props: list[PropDecl] = field(default_factory=list)
    variables: list[VarDecl] = field(default_factory=list)
    matrices: list[MatrixDecl] = field(default_factory=list)
    intents: list[IntentDecl] = field(default_factory=list)
    actions: list[ActionDef] = field(default_factory=list)
    agents: list[AgentDecl] = field(default_factory=list)
    scenes: list[Scene] = field(default_factory=list)
    leading_comments: tuple[str, ...] = ()
    lexicon_ref: str = field(default="", compare=False)

    def lexicon(self) -> Lexicon:
        return Lexicon(tuple(d.intent for d in self.intents))

    def variable(self, variable_id: str) -> LinguisticVariable:
        for decl in self.variables:
            if decl.variable.id == variable_id:
                return decl.variable
        raise KeyError(variable_id)

    def matrix_decl(self, matrix_id: str) -> MatrixDecl:
        for decl in self.matrices:
            if decl.id == matrix_id:
                return decl
        raise KeyError(matrix_id)

    def action(self, action_id: str) -> ActionDef:
        for a in self.actions:
            if a.id == action_id:
                return a
        raise KeyError(action_id)

    def scene(self, scene_id: str) -> Scene:
        for s in self.scenes:
            if s.id == scene_id:
                return s
        raise KeyError(scene_id)

    def entity_ids(self) -> set[str]:
        ids = {c.id for c in self.characters} | {p.id for p in self.props}
        ids.add(self.participant)
        return ids


def walk_blocks(doc: ScriptDoc):
    """Yield (scene, step, path, block) for every rule block at any depth.

    ``path`` is a stable dotted address like "sc1.ss2.i0" for the outer block
    and "sc1.ss2.i0.r1" for a block nested in that block's second rule.
    """
    for scene in doc.scenes:
        for step in scene.steps:
            for idx, item in enumerate(step.items):
                if isinstance(item, RuleBlock):
                    yield from _walk_block(scene, step, f"{scene.id}.{step.id}.i{idx}", item)


def _walk_block(scene: Scene, step: SceneStep, path: str, block: RuleBlock):
    yield scene, step, path, block
    for ridx, rule in enumerate(block.all_rules()):
        if rule.consequence.nested is not None:
            yield from _walk_block(scene, step, f"{path}.r{ridx}", rule.consequence.nested)
