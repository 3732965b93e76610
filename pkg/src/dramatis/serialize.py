"""Canonical text form of a script model.

Output is deterministic: two-space indentation, fixed section order, floats
in shortest round-trip form.  Parsing the output yields a model equal to the
one serialized (line numbers are not part of model equality).
"""

from __future__ import annotations

from .fuzzy import LinguisticVariable
from .model import (
    ActionDef,
    ActionRef,
    AgentDecl,
    Consequence,
    Control,
    EndMarker,
    Fact,
    IncompatDecl,
    MatrixDecl,
    MatrixDirective,
    NotpMode,
    Rule,
    RuleBlock,
    Scene,
    SceneStep,
    ScriptDoc,
    StatedAction,
    StateCondition,
    TimeoutCondition,
    IntentCondition,
    VariableTermCondition,
)

INDENT = "  "


def _num(x: float) -> str:
    return repr(float(x))


def _fact_value(value: object) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


def _fact(fact: Fact) -> str:
    return f"{fact.subject}.{fact.predicate} = {_fact_value(fact.value)}"


class _Writer:
    def __init__(self) -> None:
        self.lines: list[str] = []

    def put(self, depth: int, text: str) -> None:
        self.lines.append(INDENT * depth + text)

    def comments(self, depth: int, comments: tuple[str, ...]) -> None:
        for text in comments:
            self.put(depth, f"({text})")

    def blank(self) -> None:
        if self.lines and self.lines[-1] != "":
            self.lines.append("")


def canonical_serialize(doc: ScriptDoc) -> str:
    w = _Writer()
    w.comments(0, doc.leading_comments)
    if doc.title:
        w.put(0, f'TITLE "{doc.title}"')
    w.put(0, f"PARTICIPANT {doc.participant}")
    w.blank()
    for c in doc.characters:
        stage = "ON_STAGE" if c.on_stage else "OFF_STAGE"
        extras = [f"zone={c.zone}"] if c.zone else []
        extras += [f"{f.predicate}={_fact_value(f.value)}" for f in c.facts]
        w.put(0, " ".join(["CHARACTER", c.id, stage] + extras))
        w.comments(0, c.comments)
    for p in doc.props:
        extras = [f"{f.predicate}={_fact_value(f.value)}" for f in p.facts]
        w.put(0, " ".join(["PROP", p.id] + extras))
        w.comments(0, p.comments)
    if doc.variables:
        w.blank()
        w.put(0, "VARS")
        for decl in doc.variables:
            _write_variable(w, decl.variable)
            w.comments(1, decl.comments)
    for m in doc.matrices:
        w.blank()
        _write_matrix(w, m)
    if doc.intents:
        w.blank()
        w.put(0, "LEXICON")
        for decl in doc.intents:
            intent = decl.intent
            w.put(1, f"INTENT {intent.id}")
            for phrase in intent.phrases:
                w.put(2, f"PHRASE {phrase}")
            for group in intent.synonym_groups:
                w.put(2, "SYN " + " ".join(group))
            w.comments(1, decl.comments)
    if doc.actions:
        w.blank()
        w.put(0, "ACTIONS")
        for a in doc.actions:
            _write_action(w, a)
    if doc.agents:
        w.blank()
        w.put(0, "AGENTS")
        for agent in doc.agents:
            _write_agent(w, agent)
    for scene in doc.scenes:
        w.blank()
        _write_scene(w, scene)
    return "\n".join(w.lines).rstrip("\n") + "\n"


def _write_variable(w: _Writer, var: LinguisticVariable) -> None:
    lo, hi = var.domain
    w.put(1, f"VAR {var.id} DOMAIN {_num(lo)} {_num(hi)}")
    for term in var.terms:
        points = " ".join(f"({_num(x)},{_num(mu)})" for x, mu in term.membership.points)
        w.put(2, f"TERM {term.id} POINTS {points}")


def _write_matrix(w: _Writer, m: MatrixDecl) -> None:
    w.put(0, f"MATRIX {m.id} ROWS {m.row_variable} COLS {m.col_variable}")
    for row in m.rows:
        cells = " | ".join(" & ".join(cell) for cell in row.cells)
        w.put(1, f"ROW {row.label}: {cells}")
    for inc in m.incompats:
        _write_incompat(w, inc)
    w.comments(1, m.comments)


def _write_incompat(w: _Writer, inc: IncompatDecl) -> None:
    text = f"INCOMPAT {inc.first} {inc.second}"
    if inc.when is not None:
        text += f" WHEN {_fact(inc.when)}"
    if inc.override:
        text += " -> " + " & ".join(inc.override)
    w.put(1, text)
    w.comments(1, inc.comments)


def _write_action(w: _Writer, a: ActionDef) -> None:
    w.put(1, f'ACTION {a.id} BY {a.performer} "{a.description}"')
    for fact in a.preconditions:
        w.put(2, f"REQUIRES {_fact(fact)}")
    for fact in a.effects:
        w.put(2, f"EFFECT {_fact(fact)}")
    w.comments(1, a.comments)


def _write_agent(w: _Writer, agent: AgentDecl) -> None:
    w.put(1, f"AGENT {agent.character}")
    for g in agent.goals:
        w.put(2, f"GOAL {g.id} CONDITION {g.condition} "
                 f"IMPORTANCE {_num(g.importance)} RELEVANCE {_num(g.relevance)}")
    for m in agent.modules:
        w.put(2, f"MODULE {m.id} ACTION {m.action_id}")
        for prop in m.preconditions:
            w.put(3, f"PRE {prop}")
        for prop, expectation in m.effects:
            w.put(3, f"EFFECT {prop} {_num(expectation)}")
    w.comments(1, agent.comments)


def _write_scene(w: _Writer, scene: Scene) -> None:
    head = f"SCENE {scene.id}"
    if scene.ambient:
        head += f' "{scene.ambient}"'
    w.put(0, head)
    w.comments(1, scene.comments)
    for step in scene.steps:
        w.put(1, f"STEP {step.id}")
        w.comments(2, step.comments)
        for item in step.items:
            _write_item(w, item, 2)


def _write_item(w: _Writer, item: object, depth: int) -> None:
    if isinstance(item, StatedAction):
        w.put(depth, f"DO {item.ref.action_id}")
        w.comments(depth, item.comments)
    elif isinstance(item, MatrixDirective):
        w.put(depth, f"MATRIX {item.matrix_id}")
        w.comments(depth, item.comments)
    elif isinstance(item, EndMarker):
        w.put(depth, "END")
        w.comments(depth, item.comments)
    elif isinstance(item, RuleBlock):
        _write_block(w, item, depth)
    else:
        raise TypeError(f"unexpected step item {item!r}")


def _write_block(w: _Writer, block: RuleBlock, depth: int) -> None:
    for rule in block.rules:
        _write_rule(w, rule, depth, block)
    if block.notp_rule is not None:
        _write_rule(w, block.notp_rule, depth, block)


def _condition_head(rule: Rule, block: RuleBlock) -> str:
    cond = rule.condition
    if rule.is_notp():
        mode = block.notp_mode
        if mode.kind == "immediate":
            return "NOTP IMMEDIATE"
        if mode.kind == "after":
            return f"NOTP AFTER {mode.ticks}"
        return "NOTP"
    if isinstance(cond, IntentCondition):
        return f"IF SAYS ~{cond.intent_id}"
    if isinstance(cond, VariableTermCondition):
        return f"IF {cond.variable_id} IS {cond.term_id}"
    if isinstance(cond, TimeoutCondition):
        return f"IF TIMEOUT {cond.ticks}"
    if isinstance(cond, StateCondition):
        return f"IF STATE {_fact(cond.fact)}"
    raise TypeError(f"unexpected condition {cond!r}")


def _consequence_text(cons: Consequence) -> str:
    actions = ", ".join(
        f"[{ref.action_id}]" if ref.bracketed else ref.action_id for ref in cons.actions
    )
    if cons.nested is not None:
        return actions
    control = _control_text(cons.control)
    if not actions:
        return control or "STAY"
    if cons.control.kind == "stay":
        return actions
    return f"{actions} ; {control}"


def _control_text(control: Control) -> str:
    table = {"next": "NEXT", "continue": "CONTINUE", "stay": "STAY",
             "wait": "WAIT", "end": "END"}
    if control.kind == "goto":
        return f"GOTO {control.target}"
    return table[control.kind]


def _write_rule(w: _Writer, rule: Rule, depth: int, block: RuleBlock) -> None:
    head = _condition_head(rule, block)
    if rule.inline_comment is not None:
        head += f" ({rule.inline_comment})"
    body = _consequence_text(rule.consequence)
    w.put(depth, f"{head} THEN {body}".rstrip())
    if rule.consequence.nested is not None:
        _write_block(w, rule.consequence.nested, depth + 1)
    w.comments(depth, rule.comments)
