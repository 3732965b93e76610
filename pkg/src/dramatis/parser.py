"""Parser for the .drama script format.

The format is line-oriented.  Indentation (spaces, any consistent widths)
expresses nesting; parenthesized text is commentary; quoted strings carry
prose.  Sections for declarations (VARS, MATRIX, LEXICON, ACTIONS, AGENTS)
and scenes may live in one file or be pulled in with INCLUDE.

The parser enforces document structure: block termination by NOTP, unique
identifiers, one END marker.  Cross-reference resolution is left to
``validate_script`` so a half-edited script can still be loaded and reported
on as data.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from . import model
from .errors import ParseError
from .fuzzy import LinguisticVariable, PiecewiseLinear, Term
from .intent import Intent, normalize
from .model import (
    ActionDef,
    ActionRef,
    AgentDecl,
    CharacterDecl,
    Condition,
    Consequence,
    Control,
    EndMarker,
    Fact,
    GoalDecl,
    IncompatDecl,
    IntentCondition,
    IntentDecl,
    MatrixDecl,
    MatrixDirective,
    MatrixRow,
    ModuleDecl,
    NotpCondition,
    PropDecl,
    Rule,
    RuleBlock,
    Scene,
    SceneStep,
    ScriptDoc,
    StateCondition,
    StatedAction,
    TimeoutCondition,
    VarDecl,
    VariableTermCondition,
)

KEYWORDS = {
    "TITLE", "PARTICIPANT", "CHARACTER", "PROP", "INCLUDE",
    "VARS", "VAR", "DOMAIN", "TERM", "POINTS",
    "MATRIX", "ROWS", "COLS", "ROW", "INCOMPAT", "WHEN",
    "LEXICON", "INTENT", "PHRASE", "SYN",
    "ACTIONS", "ACTION", "BY", "REQUIRES", "EFFECT",
    "AGENTS", "AGENT", "GOAL", "CONDITION", "IMPORTANCE", "RELEVANCE",
    "MODULE", "PRE",
    "SCENE", "STEP", "DO", "IF", "THEN", "NOTP", "IMMEDIATE", "AFTER",
    "SAYS", "IS", "TIMEOUT", "STATE",
    "NEXT", "CONTINUE", "STAY", "WAIT", "GOTO", "END",
    "ON_STAGE", "OFF_STAGE",
}

_ID_RE = re.compile(r"[A-Za-z](?:[A-Za-z0-9_.]*[A-Za-z0-9_])?$")
_FACT_RE = re.compile(r"([A-Za-z]\w*)\.([A-Za-z]\w*)$")
_POINT_RE = re.compile(r"\(\s*([^\s,()]+)\s*,\s*([^\s,()]+)\s*\)")
_COMMENT_LINE_RE = re.compile(r"^\((.*)\)$")
_INLINE_COMMENT_RE = re.compile(r"\(([^()]*)\)")


@dataclass
class _Node:
    """One significant source line with its nested children."""

    text: str
    line: int
    indent: int
    children: list[_Node] = field(default_factory=list)

    def first_word(self) -> str:
        return self.text.split(None, 1)[0]

    def rest(self) -> str:
        parts = self.text.split(None, 1)
        return parts[1].strip() if len(parts) > 1 else ""


def _build_tree(source: str) -> list[_Node]:
    """Group lines into a forest by indentation.

    Children are any deeper lines following a node; siblings must share an
    indent column already on the stack, otherwise the indentation dangles.
    """
    roots: list[_Node] = []
    stack: list[_Node] = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        if not raw.strip():
            continue
        stripped = raw.lstrip(" ")
        indent = len(raw) - len(stripped)
        if stripped.startswith("\t") or raw[:indent].count("\t"):
            raise ParseError("tab in indentation; use spaces", lineno, 1)
        node = _Node(stripped.rstrip(), lineno, indent)
        while stack and stack[-1].indent >= indent:
            stack.pop()
        if stack:
            parent = stack[-1]
            if parent.children and parent.children[-1].indent != indent:
                raise ParseError(
                    f"indentation of {indent} does not match the enclosing level",
                    lineno, indent + 1, code="DanglingIndent",
                )
            parent.children.append(node)
        else:
            if roots and indent != roots[0].indent:
                raise ParseError(
                    f"top-level line indented by {indent}", lineno, indent + 1,
                    code="DanglingIndent",
                )
            roots.append(node)
        stack.append(node)
    return roots


class _DocBuilder:
    def __init__(self, base_path: Path | None, fragment: bool = False,
                 seen_includes: frozenset[str] = frozenset()):
        self.base_path = base_path
        self.fragment = fragment
        self.seen_includes = seen_includes
        self.doc = ScriptDoc()
        self._last_node: object | None = None
        self._end_count = 0
        self._ids: dict[str, tuple[str, int]] = {}

    # -- small helpers ------------------------------------------------------

    def err(self, message: str, node: _Node, code: str = "Syntax") -> ParseError:
        return ParseError(message, node.line, node.indent + 1, code=code)

    def register(self, kind: str, ident: str, node: _Node) -> None:
        key = f"{kind}:{ident}"
        if key in self._ids:
            raise ParseError(
                f"duplicate {kind} id {ident!r} (first declared on line {self._ids[key][1]})",
                node.line, node.indent + 1, code="DuplicateId",
            )
        self._ids[key] = (ident, node.line)

    def ident(self, token: str, node: _Node, what: str = "identifier") -> str:
        if token in KEYWORDS:
            raise self.err(f"{token!r} is a reserved keyword, not a valid {what}", node)
        if not _ID_RE.match(token):
            raise self.err(f"malformed {what} {token!r}", node)
        return token

    def attach_comment(self, text: str) -> None:
        target = self._last_node
        if target is None:
            self.doc.leading_comments = self.doc.leading_comments + (text,)
            return
        target.comments = getattr(target, "comments", ()) + (text,)

    def remember(self, obj: object) -> None:
        self._last_node = obj

    def comment_text(self, node: _Node) -> str | None:
        m = _COMMENT_LINE_RE.match(node.text)
        return m.group(1).strip() if m else None

    def no_children(self, node: _Node) -> None:
        if node.children:
            child = node.children[0]
            raise self.err(f"unexpected indentation under {node.first_word()!r}",
                           child, code="DanglingIndent")

    # -- top level ----------------------------------------------------------

    def build(self, roots: list[_Node]) -> ScriptDoc:
        for node in roots:
            text = self.comment_text(node)
            if text is not None:
                self.no_children(node)
                self.attach_comment(text)
                continue
            word = node.first_word()
            if word == "TITLE":
                self.doc.title = self.quoted(node.rest(), node)
                self.no_children(node)
            elif word == "PARTICIPANT":
                self.doc.participant = self.ident(node.rest(), node, "participant id")
                self.no_children(node)
            elif word == "CHARACTER":
                self.parse_character(node)
            elif word == "PROP":
                self.parse_prop(node)
            elif word == "INCLUDE":
                self.parse_include(node)
            elif word == "VARS":
                self.parse_vars(node)
            elif word == "MATRIX":
                self.parse_matrix(node)
            elif word == "LEXICON":
                self.parse_lexicon(node)
            elif word == "ACTIONS":
                self.parse_actions(node)
            elif word == "AGENTS":
                self.parse_agents(node)
            elif word == "SCENE":
                if self.fragment:
                    raise self.err("scenes are not allowed in included files", node)
                self.parse_scene(node)
            elif word in KEYWORDS:
                raise self.err(f"{word} is not valid at the top level", node,
                               code="UnknownKeyword")
            else:
                raise self.err(f"unknown keyword {word!r}", node, code="UnknownKeyword")
        if not self.fragment:
            if not self.doc.scenes:
                raise ParseError("script declares no scenes", 1, 1)
            if self._end_count == 0:
                raise ParseError("script has no END marker", 1, 1)
        return self.doc

    def quoted(self, text: str, node: _Node) -> str:
        text = text.strip()
        if len(text) < 2 or not text.startswith('"') or not text.endswith('"'):
            raise self.err(f'expected a quoted string, got {text!r}', node)
        return text[1:-1]

    # -- declarations -------------------------------------------------------

    def parse_fact_pairs(self, tokens: list[str], node: _Node, subject: str) -> list[Fact]:
        facts = []
        for token in tokens:
            if "=" not in token:
                raise self.err(f"expected key=value, got {token!r}", node)
            key, _, value = token.partition("=")
            facts.append(Fact(subject, self.ident(key, node, "predicate"),
                              self.fact_value(value, node)))
        return facts

    def fact_value(self, token: str, node: _Node) -> model.FactValue:
        if token == "true":
            return True
        if token == "false":
            return False
        return self.ident(token, node, "value tag")

    def parse_character(self, node: _Node) -> None:
        tokens = node.rest().split()
        if len(tokens) < 2 or tokens[1] not in ("ON_STAGE", "OFF_STAGE"):
            raise self.err("expected CHARACTER <id> ON_STAGE|OFF_STAGE [key=value ...]", node)
        ident = self.ident(tokens[0], node, "character id")
        self.register("entity", ident, node)
        zone = ""
        extra: list[Fact] = []
        for fact in self.parse_fact_pairs(tokens[2:], node, ident):
            if fact.predicate == "zone":
                zone = str(fact.value)
            else:
                extra.append(fact)
        decl = CharacterDecl(ident, tokens[1] == "ON_STAGE", zone, tuple(extra),
                             line=node.line)
        self.doc.characters.append(decl)
        self.remember(decl)
        self.no_children(node)

    def parse_prop(self, node: _Node) -> None:
        tokens = node.rest().split()
        if not tokens:
            raise self.err("expected PROP <id> [key=value ...]", node)
        ident = self.ident(tokens[0], node, "prop id")
        self.register("entity", ident, node)
        decl = PropDecl(ident, tuple(self.parse_fact_pairs(tokens[1:], node, ident)),
                        line=node.line)
        self.doc.props.append(decl)
        self.remember(decl)
        self.no_children(node)

    def parse_include(self, node: _Node) -> None:
        rel = self.quoted(node.rest(), node)
        self.no_children(node)
        if self.base_path is None:
            raise self.err("INCLUDE needs a base path; parse the file from disk", node)
        target = (self.base_path / rel).resolve()
        key = str(target)
        if key in self.seen_includes:
            raise self.err(f"circular INCLUDE of {rel!r}", node)
        try:
            source = target.read_text(encoding="utf-8")
        except OSError as exc:
            raise self.err(f"cannot read include {rel!r}: {exc}", node)
        sub = _DocBuilder(target.parent, fragment=True,
                          seen_includes=self.seen_includes | {key})
        fragment = sub.build(_build_tree(source))
        for name in ("characters", "props", "variables", "matrices",
                     "intents", "actions", "agents"):
            getattr(self.doc, name).extend(getattr(fragment, name))
        if fragment.intents:
            self.doc.lexicon_ref = rel
        for dup_key, (ident, line) in sub._ids.items():
            if dup_key in self._ids:
                raise self.err(f"include redeclares {dup_key.split(':', 1)[0]} {ident!r}",
                               node, code="DuplicateId")
            self._ids[dup_key] = (ident, line)

    def parse_vars(self, node: _Node) -> None:
        if node.rest():
            raise self.err("VARS takes no arguments", node)
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                self.attach_comment(text)
                continue
            if child.first_word() != "VAR":
                raise self.err(f"expected VAR inside VARS, got {child.first_word()!r}",
                               child, code="UnknownKeyword")
            self.parse_var(child)

    def parse_var(self, node: _Node) -> None:
        m = re.match(r"VAR\s+(\S+)\s+DOMAIN\s+(\S+)\s+(\S+)$", node.text)
        if not m:
            raise self.err("expected VAR <id> DOMAIN <lo> <hi>", node)
        ident = self.ident(m.group(1), node, "variable id")
        self.register("variable", ident, node)
        domain = (self.number(m.group(2), node), self.number(m.group(3), node))
        terms: list[Term] = []
        comments: list[str] = []
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                comments.append(text)
                continue
            tm = re.match(r"TERM\s+(\S+)\s+POINTS\s+(.*)$", child.text)
            if not tm:
                raise self.err("expected TERM <id> POINTS (x,mu) ...", child)
            term_id = self.ident(tm.group(1), child, "term id")
            points = []
            spec_text = tm.group(2)
            covered = _POINT_RE.sub("", spec_text).strip()
            if covered:
                raise self.err(f"malformed points near {covered!r}", child)
            for px, pmu in _POINT_RE.findall(spec_text):
                points.append((self.number(px, child), self.number(pmu, child)))
            try:
                terms.append(Term(term_id, PiecewiseLinear(tuple(points))))
            except ValueError as exc:
                raise self.err(str(exc), child)
        try:
            variable = LinguisticVariable(ident, tuple(terms), domain)
        except ValueError as exc:
            raise self.err(str(exc), node, code="DuplicateId" if "duplicate" in str(exc) else "Syntax")
        decl = VarDecl(variable, tuple(comments), line=node.line)
        self.doc.variables.append(decl)
        self.remember(decl)

    def number(self, token: str, node: _Node) -> float:
        try:
            return float(token)
        except ValueError:
            raise self.err(f"expected a number, got {token!r}", node)

    def parse_matrix(self, node: _Node) -> None:
        m = re.match(r"MATRIX\s+(\S+)\s+ROWS\s+(\S+)\s+COLS\s+(\S+)$", node.text)
        if not m:
            raise self.err("expected MATRIX <id> ROWS <variable> COLS <variable>", node)
        ident = self.ident(m.group(1), node, "matrix id")
        self.register("matrix", ident, node)
        decl = MatrixDecl(ident, self.ident(m.group(2), node, "variable id"),
                          self.ident(m.group(3), node, "variable id"), line=node.line)
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                decl.comments = decl.comments + (text,)
                continue
            word = child.first_word()
            if word == "ROW":
                decl.rows.append(self.parse_matrix_row(child))
            elif word == "INCOMPAT":
                decl.incompats.append(self.parse_incompat(child))
            else:
                raise self.err(f"expected ROW or INCOMPAT, got {word!r}", child,
                               code="UnknownKeyword")
            self.no_children(child)
        self.doc.matrices.append(decl)
        self.remember(decl)

    def parse_matrix_row(self, node: _Node) -> MatrixRow:
        m = re.match(r"ROW\s+([^:]+):(.*)$", node.text)
        if not m:
            raise self.err("expected ROW <term|NOTP>: cell | cell | ...", node)
        label = m.group(1).strip()
        if label != "NOTP":
            label = self.ident(label, node, "row label")
        cells: list[tuple[str, ...]] = []
        for cell_text in m.group(2).split("|"):
            actions = [a.strip() for a in cell_text.split("&") if a.strip()]
            for a in actions:
                self.ident(a, node, "action id")
            cells.append(tuple(actions))
        return MatrixRow(label, tuple(cells), line=node.line)

    def parse_incompat(self, node: _Node) -> IncompatDecl:
        text = node.rest()
        override: tuple[str, ...] = ()
        if "->" in text:
            text, _, override_text = text.partition("->")
            override = tuple(
                self.ident(a.strip(), node, "action id")
                for a in override_text.split("&") if a.strip()
            )
            if not override:
                raise self.err("override after -> must list actions", node)
        when: Fact | None = None
        if " WHEN " in f" {text} ":
            text, _, when_text = text.partition("WHEN")
            when = self.parse_fact_expr(when_text.strip(), node)
        tokens = text.split()
        if len(tokens) != 2 or tokens[0] == tokens[1]:
            raise self.err("expected INCOMPAT <action> <action> [WHEN fact] [-> actions]", node)
        return IncompatDecl(self.ident(tokens[0], node, "action id"),
                            self.ident(tokens[1], node, "action id"),
                            when, override, line=node.line)

    def parse_fact_expr(self, text: str, node: _Node) -> Fact:
        value: model.FactValue = True
        if "=" in text:
            text, _, value_text = text.partition("=")
            value = self.fact_value(value_text.strip(), node)
        m = _FACT_RE.match(text.strip())
        if not m:
            raise self.err(f"expected <subject>.<predicate>[ = value], got {text.strip()!r}", node)
        return Fact(m.group(1), m.group(2), value)

    def parse_lexicon(self, node: _Node) -> None:
        if node.rest():
            raise self.err("LEXICON takes no arguments", node)
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                self.attach_comment(text)
                continue
            if child.first_word() != "INTENT":
                raise self.err(f"expected INTENT inside LEXICON, got {child.first_word()!r}",
                               child, code="UnknownKeyword")
            self.parse_intent(child)

    def parse_intent(self, node: _Node) -> None:
        ident = self.ident(node.rest(), node, "intent id")
        self.register("intent", ident, node)
        phrases: list[str] = []
        groups: list[tuple[str, ...]] = []
        comments: list[str] = []
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                comments.append(text)
                continue
            word = child.first_word()
            if word == "PHRASE":
                if not child.rest():
                    raise self.err("PHRASE needs text", child)
                phrases.append(child.rest())
            elif word == "SYN":
                tokens = child.rest().split()
                if len(tokens) < 2:
                    raise self.err("SYN needs at least two tokens", child)
                groups.append(tuple(normalize(" ".join(tokens))))
            else:
                raise self.err(f"expected PHRASE or SYN, got {word!r}", child,
                               code="UnknownKeyword")
            self.no_children(child)
        try:
            intent = Intent(ident, tuple(phrases), tuple(groups))
        except ValueError as exc:
            raise self.err(str(exc), node)
        decl = IntentDecl(intent, tuple(comments), line=node.line)
        self.doc.intents.append(decl)
        self.remember(decl)

    def parse_actions(self, node: _Node) -> None:
        if node.rest():
            raise self.err("ACTIONS takes no arguments", node)
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                self.attach_comment(text)
                continue
            if child.first_word() != "ACTION":
                raise self.err(f"expected ACTION inside ACTIONS, got {child.first_word()!r}",
                               child, code="UnknownKeyword")
            self.parse_action(child)

    def parse_action(self, node: _Node) -> None:
        m = re.match(r'ACTION\s+(\S+)\s+BY\s+(\S+)\s+"([^"]*)"$', node.text)
        if not m:
            raise self.err('expected ACTION <id> BY <performer> "<description>"', node)
        ident = self.ident(m.group(1), node, "action id")
        self.register("action", ident, node)
        performer = self.ident(m.group(2), node, "performer id")
        pre: list[Fact] = []
        effects: list[Fact] = []
        comments: list[str] = []
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                comments.append(text)
                continue
            word = child.first_word()
            if word == "REQUIRES":
                pre.append(self.parse_fact_expr(child.rest(), child))
            elif word == "EFFECT":
                effects.append(self.parse_fact_expr(child.rest(), child))
            else:
                raise self.err(f"expected REQUIRES or EFFECT, got {word!r}", child,
                               code="UnknownKeyword")
            self.no_children(child)
        for facts, what in ((pre, "precondition"), (effects, "effect")):
            seen: set[tuple[str, str]] = set()
            for fact in facts:
                if fact.key() in seen:
                    raise self.err(
                        f"duplicate {what} for {fact.subject}.{fact.predicate}",
                        node, code="DuplicateId")
                seen.add(fact.key())
        decl = ActionDef(ident, performer, m.group(3), tuple(pre), tuple(effects),
                         tuple(comments), line=node.line)
        self.doc.actions.append(decl)
        self.remember(decl)

    def parse_agents(self, node: _Node) -> None:
        if node.rest():
            raise self.err("AGENTS takes no arguments", node)
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                self.attach_comment(text)
                continue
            if child.first_word() != "AGENT":
                raise self.err(f"expected AGENT inside AGENTS, got {child.first_word()!r}",
                               child, code="UnknownKeyword")
            self.parse_agent(child)

    def parse_agent(self, node: _Node) -> None:
        ident = self.ident(node.rest(), node, "character id")
        self.register("agent", ident, node)
        decl = AgentDecl(ident, line=node.line)
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                decl.comments = decl.comments + (text,)
                continue
            word = child.first_word()
            if word == "GOAL":
                decl.goals.append(self.parse_goal(child))
                self.no_children(child)
            elif word == "MODULE":
                decl.modules.append(self.parse_module(child))
            else:
                raise self.err(f"expected GOAL or MODULE, got {word!r}", child,
                               code="UnknownKeyword")
        self.doc.agents.append(decl)
        self.remember(decl)

    def parse_goal(self, node: _Node) -> GoalDecl:
        m = re.match(
            r"GOAL\s+(\S+)\s+CONDITION\s+(\S+)\s+IMPORTANCE\s+(\S+)\s+RELEVANCE\s+(\S+)$",
            node.text)
        if not m:
            raise self.err(
                "expected GOAL <id> CONDITION <prop> IMPORTANCE <x> RELEVANCE <x>", node)
        return GoalDecl(self.ident(m.group(1), node, "goal id"),
                        self.proposition(m.group(2), node),
                        self.number(m.group(3), node), self.number(m.group(4), node),
                        line=node.line)

    def proposition(self, token: str, node: _Node) -> str:
        if not token or token.split("=")[0] in KEYWORDS:
            raise self.err(f"malformed proposition {token!r}", node)
        return token

    def parse_module(self, node: _Node) -> ModuleDecl:
        m = re.match(r"MODULE\s+(\S+)\s+ACTION\s+(\S+)$", node.text)
        if not m:
            raise self.err("expected MODULE <id> ACTION <action id>", node)
        pre: list[str] = []
        effects: list[tuple[str, float]] = []
        for child in node.children:
            word = child.first_word()
            if word == "PRE":
                pre.append(self.proposition(child.rest(), child))
            elif word == "EFFECT":
                tokens = child.rest().split()
                if len(tokens) != 2:
                    raise self.err("expected EFFECT <prop> <expectation>", child)
                effects.append((self.proposition(tokens[0], child),
                                self.number(tokens[1], child)))
            else:
                raise self.err(f"expected PRE or EFFECT, got {word!r}", child,
                               code="UnknownKeyword")
            self.no_children(child)
        return ModuleDecl(self.ident(m.group(1), node, "module id"),
                          self.ident(m.group(2), node, "action id"),
                          tuple(pre), tuple(effects), line=node.line)

    # -- scenes -------------------------------------------------------------

    def parse_scene(self, node: _Node) -> None:
        m = re.match(r'SCENE\s+(\S+)(?:\s+"([^"]*)")?$', node.text)
        if not m:
            raise self.err('expected SCENE <id> ["<ambient>"]', node)
        ident = self.ident(m.group(1), node, "scene id")
        self.register("scene", ident, node)
        scene = Scene(ident, m.group(2) or "", line=node.line)
        self.doc.scenes.append(scene)
        self.remember(scene)
        for child in node.children:
            text = self.comment_text(child)
            if text is not None:
                self.no_children(child)
                self.attach_comment(text)
                continue
            if child.first_word() != "STEP":
                raise self.err(f"expected STEP inside SCENE, got {child.first_word()!r}",
                               child, code="UnknownKeyword")
            self.parse_step(scene, child)
        if not scene.steps:
            raise self.err(f"scene {ident!r} has no steps", node)

    def parse_step(self, scene: Scene, node: _Node) -> None:
        ident = self.ident(node.rest(), node, "step id")
        self.register("step", f"{scene.id}.{ident}", node)
        step = SceneStep(ident, line=node.line)
        scene.steps.append(step)
        self.remember(step)
        step.items.extend(self.parse_items(node.children, depth=1))

    def parse_items(self, nodes: list[_Node], depth: int) -> list[model.StepItem]:
        """Parse a step's item list; consecutive IF/NOTP lines form one block."""
        items: list[model.StepItem] = []
        open_block: RuleBlock | None = None

        def close_block(at: _Node) -> None:
            nonlocal open_block
            if open_block is not None and open_block.notp_rule is None:
                raise ParseError(
                    "rule block is not terminated by a NOTP rule",
                    at.line, at.indent + 1, code="MissingNotp",
                )
            open_block = None

        last = None
        for node in nodes:
            last = node
            text = self.comment_text(node)
            if text is not None:
                self.no_children(node)
                self.attach_comment(text)
                continue
            word = node.first_word()
            if word in ("IF", "NOTP"):
                if open_block is None or open_block.notp_rule is not None:
                    close_block(node)
                    open_block = RuleBlock(nesting_depth=depth, line=node.line)
                    items.append(open_block)
                rule, notp_mode = self.parse_rule(node, depth)
                if rule.is_notp():
                    open_block.notp_rule = rule
                    open_block.notp_mode = notp_mode or model.NOTP_DEFAULT
                else:
                    open_block.rules.append(rule)
                self.remember(rule)
                continue
            close_block(node)
            if word == "DO":
                ref = node.rest()
                if ref.startswith("["):
                    raise self.err("bracketed actions are only allowed inside rule consequences", node)
                item: model.StepItem = StatedAction(
                    ActionRef(self.ident(ref, node, "action id")), line=node.line)
            elif word == "MATRIX":
                item = MatrixDirective(self.ident(node.rest(), node, "matrix id"),
                                       line=node.line)
            elif word == "END":
                if node.rest():
                    raise self.err("END takes no arguments", node)
                if self.fragment:
                    raise self.err("END is not allowed in included files", node)
                self._end_count += 1
                if self._end_count > 1:
                    raise self.err("script already has an END marker", node,
                                   code="DuplicateId")
                item = EndMarker(line=node.line)
            elif word in KEYWORDS:
                raise self.err(f"{word} is not valid inside a step", node,
                               code="UnknownKeyword")
            else:
                raise self.err(f"unknown keyword {word!r}", node, code="UnknownKeyword")
            self.no_children(node)
            items.append(item)
            self.remember(item)
        if last is not None and open_block is not None and open_block.notp_rule is None:
            raise ParseError("rule block is not terminated by a NOTP rule",
                             last.line, last.indent + 1, code="MissingNotp")
        return items

    # -- rules --------------------------------------------------------------

    def parse_rule(self, node: _Node, depth: int) -> tuple[Rule, model.NotpMode | None]:
        text = node.text
        inline_comment: str | None = None
        m = _INLINE_COMMENT_RE.search(text)
        if m:
            inline_comment = m.group(1).strip()
            text = (text[: m.start()] + " " + text[m.end():]).strip()
            if _INLINE_COMMENT_RE.search(text):
                raise self.err("only one inline comment per rule", node)
        text = re.sub(r"\s*,\s*THEN\b", " THEN", text)
        split = re.search(r"\bTHEN\b", text)
        if not split:
            raise self.err("malformed rule: missing THEN", node)
        head = text[: split.start()].strip()
        tail = text[split.end():].strip()
        condition, notp_mode = self.parse_condition_head(head, node)
        consequence, explicit_control = self.parse_consequence(tail, node)
        if node.children:
            if explicit_control:
                raise self.err(
                    "a rule with a nested block cannot carry a control directive", node)
            consequence.nested = self.parse_nested_block(node.children, depth + 1, node)
        return Rule(condition, consequence, inline_comment, line=node.line), notp_mode

    def parse_nested_block(self, nodes: list[_Node], depth: int, parent: _Node) -> RuleBlock:
        items = self.parse_items(nodes, depth)
        blocks = [i for i in items if isinstance(i, RuleBlock)]
        if len(items) != len(blocks) or len(blocks) != 1:
            raise self.err("only one nested rule block may follow a rule", parent)
        return blocks[0]

    def parse_condition_head(self, head: str, node: _Node) -> tuple[Condition, model.NotpMode | None]:
        tokens = head.split()
        if not tokens:
            raise self.err("malformed rule: empty condition", node)
        if tokens[0] == "NOTP":
            if len(tokens) == 1:
                return NotpCondition(), model.NOTP_DEFAULT
            if tokens[1] == "IMMEDIATE" and len(tokens) == 2:
                return NotpCondition(), model.NOTP_IMMEDIATE
            if tokens[1] == "AFTER" and len(tokens) == 3:
                return NotpCondition(), model.notp_after(self.int_number(tokens[2], node))
            raise self.err("expected NOTP [IMMEDIATE | AFTER <ticks>]", node)
        if tokens[0] != "IF":
            raise self.err(f"rules start with IF or NOTP, got {tokens[0]!r}", node)
        body = tokens[1:]
        if not body:
            raise self.err("malformed rule: empty condition", node)
        if body[0] == "SAYS":
            if len(body) != 2 or not body[1].startswith("~"):
                raise self.err("expected IF SAYS ~<intent id>", node)
            return IntentCondition(self.ident(body[1][1:], node, "intent id")), None
        if body[0] == "TIMEOUT":
            if len(body) != 2:
                raise self.err("expected IF TIMEOUT <ticks>", node)
            return TimeoutCondition(self.int_number(body[1], node)), None
        if body[0] == "STATE":
            return StateCondition(self.parse_fact_expr(" ".join(body[1:]), node)), None
        if len(body) == 3 and body[1] == "IS":
            return VariableTermCondition(self.ident(body[0], node, "variable id"),
                                         self.ident(body[2], node, "term id")), None
        raise self.err(f"malformed condition {' '.join(body)!r}", node)

    def int_number(self, token: str, node: _Node) -> int:
        try:
            value = int(token)
        except ValueError:
            raise self.err(f"expected an integer, got {token!r}", node)
        if value < 1:
            raise self.err(f"tick count must be >= 1, got {value}", node)
        return value

    def parse_consequence(self, text: str, node: _Node) -> tuple[Consequence, bool]:
        explicit = False
        control = model.STAY
        actions_text = text
        if ";" in text:
            actions_text, _, control_text = text.partition(";")
            control = self.parse_control(control_text.strip(), node)
            explicit = True
        else:
            maybe = text.split()
            if maybe and maybe[0] in ("NEXT", "CONTINUE", "STAY", "WAIT", "END", "GOTO"):
                control = self.parse_control(text.strip(), node)
                explicit = True
                actions_text = ""
        refs: list[ActionRef] = []
        actions_text = actions_text.strip()
        if actions_text:
            for part in actions_text.split(","):
                part = part.strip()
                if not part:
                    raise self.err("malformed action list", node)
                bracketed = part.startswith("[") and part.endswith("]")
                if bracketed:
                    part = part[1:-1].strip()
                elif "[" in part or "]" in part:
                    raise self.err(f"malformed bracketed action {part!r}", node)
                refs.append(ActionRef(self.ident(part, node, "action id"), bracketed))
        if control.kind == "wait" and refs:
            raise self.err("WAIT takes no actions; use STAY to keep actions", node)
        return Consequence(tuple(refs), control), explicit

    def parse_control(self, text: str, node: _Node) -> Control:
        tokens = text.split()
        if not tokens:
            raise self.err("empty control directive", node)
        word = tokens[0]
        if word == "GOTO":
            if len(tokens) != 2:
                raise self.err("expected GOTO <step id> or GOTO <scene>.<step>", node)
            return model.goto(self.ident(tokens[1], node, "step reference"))
        if len(tokens) != 1:
            raise self.err(f"unexpected text after {word}", node)
        table = {"NEXT": model.NEXT_STEP, "CONTINUE": model.CONTINUE,
                 "STAY": model.STAY, "WAIT": model.WAIT, "END": model.END}
        if word not in table:
            raise self.err(f"unknown control directive {word!r}", node,
                           code="UnknownKeyword")
        return table[word]


def parse_script(source: str, base_path: str | Path | None = None) -> ScriptDoc:
    """Parse .drama text into a ScriptDoc, raising ParseError on bad input.

    ``base_path`` is the directory used to resolve INCLUDE references; leave
    it None for self-contained sources.
    """
    builder = _DocBuilder(Path(base_path) if base_path is not None else None)
    return builder.build(_build_tree(source))


def parse_script_file(path: str | Path) -> ScriptDoc:
    path = Path(path)
    return parse_script(path.read_text(encoding="utf-8"), base_path=path.parent)
