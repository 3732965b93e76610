"""Static checks over a parsed script.

Findings are data, never exceptions: a report lists zero or more findings
with a severity, a stable code, and the source line they point at.  A script
is fit to run when it has no error-severity findings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fuzzy import NOTP
from .intent import Lexicon
from .matrix import detect_incompatibilities
from .model import (
    EndMarker,
    Fact,
    IntentCondition,
    MatrixDecl,
    MatrixDirective,
    Rule,
    RuleBlock,
    Scene,
    SceneStep,
    ScriptDoc,
    StateCondition,
    StatedAction,
    TimeoutCondition,
    VariableTermCondition,
    walk_blocks,
)

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    severity: str
    code: str
    line: int
    message: str

    def as_line(self) -> str:
        return f"{self.severity} {self.code} line={self.line} {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == ERROR]

    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == WARNING]

    @property
    def ok(self) -> bool:
        return not self.errors()

    def add(self, severity: str, code: str, line: int, message: str) -> None:
        self.findings.append(Finding(severity, code, line, message))

    def by_code(self, code: str) -> list[Finding]:
        return [f for f in self.findings if f.code == code]

    def to_lines(self) -> str:
        return "\n".join(f.as_line() for f in self.findings)


def validate_script(
    doc: ScriptDoc,
    matrices: list[MatrixDecl] | None = None,
    lexicon: Lexicon | None = None,
) -> ValidationReport:
    """Check references, block termination, matrix totality, and reachability.

    ``matrices`` and ``lexicon`` default to the declarations embedded in the
    document; pass them explicitly when they live in companion files.
    """
    report = ValidationReport()
    if matrices is None:
        matrices = doc.matrices
    if lexicon is None:
        lexicon = doc.lexicon()

    action_ids = {a.id for a in doc.actions}
    entity_ids = doc.entity_ids()
    variable_ids = {d.variable.id for d in doc.variables}
    matrix_ids = {m.id for m in matrices}
    intent_ids = set(lexicon.intent_ids())

    unfirable: set[int] = set()  # id() of Rule objects that can never fire

    def check_fact_refs(fact: Fact, line: int, where: str) -> None:
        if fact.subject not in entity_ids:
            report.add(ERROR, "UnresolvedRef", line,
                       f"{where} references undeclared entity {fact.subject!r}")

    # -- declarations --------------------------------------------------------

    for action in doc.actions:
        if action.performer not in entity_ids:
            report.add(ERROR, "UnresolvedRef", action.line,
                       f"action {action.id!r} is performed by undeclared {action.performer!r}")
        for fact in action.preconditions + action.effects:
            check_fact_refs(fact, action.line, f"action {action.id!r}")

    for agent in doc.agents:
        if agent.character not in entity_ids:
            report.add(ERROR, "UnresolvedRef", agent.line,
                       f"agent section names undeclared character {agent.character!r}")
        for module in agent.modules:
            if module.action_id not in action_ids:
                report.add(ERROR, "UnresolvedRef", module.line,
                           f"module {module.id!r} uses unknown action {module.action_id!r}")

    _check_matrices(report, doc, matrices, variable_ids, action_ids)

    # -- facts that can ever hold -------------------------------------------

    establishable = _establishable_facts(doc)

    # -- rule blocks ----------------------------------------------------------

    for scene, step, path, block in walk_blocks(doc):
        if block.notp_rule is None:
            report.add(ERROR, "MissingNotp", block.line,
                       f"rule block at {path} is not terminated by a NOTP rule")
        for rule in block.all_rules():
            _check_rule(report, doc, rule, path, intent_ids, variable_ids,
                        action_ids, establishable, unfirable)
            control = rule.consequence.control
            if control.kind == "goto" and _resolve_goto(doc, scene, control.target or "") is None:
                report.add(ERROR, "UnresolvedRef", rule.line,
                           f"GOTO target {control.target!r} does not exist")

    # -- step items -----------------------------------------------------------

    for scene in doc.scenes:
        for step in scene.steps:
            for item in step.items:
                if isinstance(item, StatedAction):
                    if item.ref.action_id not in action_ids:
                        report.add(ERROR, "UnresolvedRef", item.line,
                                   f"stated action {item.ref.action_id!r} is not declared")
                elif isinstance(item, MatrixDirective):
                    if item.matrix_id not in matrix_ids:
                        report.add(ERROR, "UnresolvedRef", item.line,
                                   f"matrix directive names unknown matrix {item.matrix_id!r}")

    _check_reachability(report, doc, unfirable)
    return report


def _check_rule(report, doc, rule: Rule, path: str, intent_ids, variable_ids,
                action_ids, establishable, unfirable) -> None:
    cond = rule.condition
    if isinstance(cond, IntentCondition) and cond.intent_id not in intent_ids:
        report.add(ERROR, "UnresolvedRef", rule.line,
                   f"rule at {path} listens for unknown intent {cond.intent_id!r}")
    elif isinstance(cond, VariableTermCondition):
        if cond.variable_id not in variable_ids:
            report.add(ERROR, "UnresolvedRef", rule.line,
                       f"rule at {path} reads undeclared variable {cond.variable_id!r}")
        else:
            variable = doc.variable(cond.variable_id)
            try:
                term = variable.term(cond.term_id)
            except KeyError:
                report.add(ERROR, "UnresolvedRef", rule.line,
                           f"variable {cond.variable_id!r} has no term {cond.term_id!r}")
            else:
                peak = max(mu for _, mu in term.membership.points)
                if peak < 0.5:
                    unfirable.add(id(rule))
                    report.add(WARNING, "UnfirableRule", rule.line,
                               f"term {cond.term_id!r} peaks at {peak}, below any firing threshold")
    elif isinstance(cond, StateCondition):
        fact = cond.fact
        if fact.subject not in doc.entity_ids():
            report.add(ERROR, "UnresolvedRef", rule.line,
                       f"rule at {path} tests undeclared entity {fact.subject!r}")
        elif (not _participant_zone(doc, fact)
              and (fact.subject, fact.predicate, fact.value) not in establishable):
            unfirable.add(id(rule))
            report.add(WARNING, "UnfirableRule", rule.line,
                       f"nothing in the script can make {fact.subject}.{fact.predicate} "
                       f"= {fact.value} hold")
    for ref in rule.consequence.actions:
        if ref.action_id not in action_ids:
            report.add(ERROR, "UnresolvedRef", rule.line,
                       f"rule at {path} fires undeclared action {ref.action_id!r}")


def _establishable_facts(doc: ScriptDoc) -> set[tuple[str, str, object]]:
    facts: set[tuple[str, str, object]] = set()
    for c in doc.characters:
        facts.add((c.id, "on_stage", c.on_stage))
        if c.zone:
            facts.add((c.id, "zone", c.zone))
        for f in c.facts:
            facts.add((f.subject, f.predicate, f.value))
    for p in doc.props:
        for f in p.facts:
            facts.add((f.subject, f.predicate, f.value))
    facts.add((doc.participant, "on_stage", True))
    for action in doc.actions:
        for f in action.effects:
            facts.add((f.subject, f.predicate, f.value))
    return facts


def _participant_zone(doc: ScriptDoc, fact: Fact) -> bool:
    return fact.subject == doc.participant and fact.predicate == "zone"


def _check_matrices(report, doc, matrices, variable_ids, action_ids) -> None:
    for m in matrices:
        axes_ok = True
        for axis, var_id in (("row", m.row_variable), ("col", m.col_variable)):
            if var_id not in variable_ids:
                report.add(ERROR, "UnresolvedRef", m.line,
                           f"matrix {m.id!r} {axis} variable {var_id!r} is not declared")
                axes_ok = False
        for row in m.rows:
            for cell in row.cells:
                for action_id in cell:
                    if action_id not in action_ids:
                        report.add(ERROR, "UnresolvedRef", row.line,
                                   f"matrix {m.id!r} cell uses unknown action {action_id!r}")
        for inc in m.incompats:
            for action_id in (inc.first, inc.second) + inc.override:
                if action_id not in action_ids:
                    report.add(ERROR, "UnresolvedRef", inc.line,
                               f"incompatibility names unknown action {action_id!r}")
        if not axes_ok:
            continue
        row_var = doc.variable(m.row_variable)
        col_var = doc.variable(m.col_variable)
        expected_rows = list(row_var.term_ids()) + [NOTP]
        seen_rows = [r.label for r in m.rows]
        width = len(col_var.term_ids()) + 1
        complete = True
        for label in expected_rows:
            if label not in seen_rows:
                report.add(ERROR, "IncompleteMatrix", m.line,
                           f"matrix {m.id!r} is missing row {label!r}")
                complete = False
        for row in m.rows:
            if row.label not in expected_rows:
                report.add(ERROR, "UnresolvedRef", row.line,
                           f"matrix {m.id!r} row {row.label!r} is not a term of {m.row_variable!r}")
                complete = False
            elif len(row.cells) != width or any(not cell for cell in row.cells):
                report.add(ERROR, "IncompleteMatrix", row.line,
                           f"matrix {m.id!r} row {row.label!r} must list {width} non-empty cells")
                complete = False
        if len(seen_rows) != len(set(seen_rows)):
            report.add(ERROR, "IncompleteMatrix", m.line,
                       f"matrix {m.id!r} repeats a row label")
            complete = False
        if complete:
            built = m.build(row_var, col_var)
            for finding in detect_incompatibilities(built, m.built_incompats()):
                report.add(WARNING, "IncompatibleActions", m.line, finding.describe())


# ---------------------------------------------------------------------------
# Reachability


def _block_exits(block: RuleBlock, unfirable: set[int]):
    """(has_next, has_continue, goto targets, reaches_end) for one block.

    A nested block's NEXT unwinds the whole structure, so it propagates up;
    its CONTINUE only returns to the parent block and is consumed here.
    """
    has_next = has_continue = reaches_end = False
    gotos: set[str] = set()
    for rule in block.all_rules():
        if id(rule) in unfirable:
            continue
        cons = rule.consequence
        if cons.nested is not None:
            sub_next, _, sub_gotos, sub_end = _block_exits(cons.nested, unfirable)
            has_next = has_next or sub_next
            gotos |= sub_gotos
            reaches_end = reaches_end or sub_end
            continue
        kind = cons.control.kind
        if kind == "next":
            has_next = True
        elif kind == "continue":
            has_continue = True
        elif kind == "goto":
            gotos.add(cons.control.target or "")
        elif kind == "end":
            reaches_end = True
    return has_next, has_continue, gotos, reaches_end


def _resolve_goto(doc: ScriptDoc, scene: Scene, target: str) -> tuple[str, str] | None:
    for step in scene.steps:
        if step.id == target:
            return (scene.id, step.id)
    if "." in target:
        scene_id, _, step_id = target.partition(".")
        for other in doc.scenes:
            if other.id == scene_id:
                for step in other.steps:
                    if step.id == step_id:
                        return (other.id, step.id)
    return None


def _check_reachability(report: ValidationReport, doc: ScriptDoc,
                        unfirable: set[int]) -> None:
    if not doc.scenes or not doc.scenes[0].steps:
        return
    order: list[tuple[str, str]] = []
    steps: dict[tuple[str, str], tuple[Scene, SceneStep]] = {}
    for scene in doc.scenes:
        for step in scene.steps:
            order.append((scene.id, step.id))
            steps[(scene.id, step.id)] = (scene, step)

    end_markers = [
        (scene, step, item)
        for scene in doc.scenes for step in scene.steps
        for item in step.items if isinstance(item, EndMarker)
    ]
    end_reached = False
    visited: set[tuple[str, str]] = set()
    queue = [order[0]]
    while queue:
        key = queue.pop()
        if key in visited:
            continue
        visited.add(key)
        scene, step = steps[key]
        fell_through = True
        for item in step.items:
            if isinstance(item, EndMarker):
                end_reached = True
                fell_through = False
                break
            if isinstance(item, RuleBlock):
                has_next, has_continue, gotos, _ = _block_exits(item, unfirable)
                for target in gotos:
                    resolved = _resolve_goto(doc, scene, target)
                    if resolved is not None:
                        queue.append(resolved)
                if not (has_next or has_continue):
                    fell_through = False
                    break
        if fell_through:
            idx = order.index(key)
            if idx + 1 < len(order):
                queue.append(order[idx + 1])

    for key in order:
        if key not in visited:
            scene, step = steps[key]
            report.add(WARNING, "UnreachableStep", step.line,
                       f"step {scene.id}.{step.id} can never be entered")

    if not end_reached and end_markers:
        scene, step, marker = end_markers[0]
        report.add(ERROR, "NoEndReachable", marker.line,
                   "no path from the first step reaches the END marker")
