"""Fuzzy decision matrices.

A matrix crosses the terms of two linguistic variables (each axis extended
with NOTP) and maps every cell to a joint action set.  Evaluation scores each
cell with min(row degree, col degree); selection fires the union of all cells
above a threshold.  Incompatibility declarations let a director flag action
pairs that must never co-fire, optionally with a replacement set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .fuzzy import NOTP, DegreeVector


class VariableMismatch(ValueError):
    """A degree vector belongs to a different variable than the matrix axis."""


@dataclass(frozen=True)
class ActionSet:
    """Joint actions fired together by one cell."""

    actions: frozenset[str]

    def __post_init__(self) -> None:
        if not self.actions:
            raise ValueError("cell action set must be non-empty")

    @classmethod
    def of(cls, *action_ids: str) -> ActionSet:
        return cls(frozenset(action_ids))


@dataclass(frozen=True)
class IncompatibilityDecl:
    """Two actions that conflict, optionally only under a world condition.

    ``when`` is a (subject, predicate, value) fact; None means the conflict is
    unconditional.  ``override`` is the director-supplied replacement set.
    """

    pair: frozenset[str]
    when: tuple[str, str, object] | None = None
    override: ActionSet | None = None

    def __post_init__(self) -> None:
        if len(self.pair) != 2:
            raise ValueError("incompatibility pair must name two distinct actions")


@dataclass(frozen=True)
class ScoredCell:
    row_term: str
    col_term: str
    score: float
    actions: ActionSet


@dataclass(frozen=True)
class DecisionMatrix:
    """Total table over (row terms + NOTP) x (col terms + NOTP)."""

    id: str
    row_variable: str
    col_variable: str
    row_terms: tuple[str, ...]
    col_terms: tuple[str, ...]
    cells: dict[tuple[str, str], ActionSet]

    def __post_init__(self) -> None:
        for row in self.row_labels():
            for col in self.col_labels():
                if (row, col) not in self.cells:
                    raise ValueError(f"matrix {self.id!r} missing cell ({row}, {col})")
        if len(self.cells) != len(self.row_labels()) * len(self.col_labels()):
            raise ValueError(f"matrix {self.id!r} has cells outside its axes")

    def row_labels(self) -> tuple[str, ...]:
        return self.row_terms + (NOTP,)

    def col_labels(self) -> tuple[str, ...]:
        return self.col_terms + (NOTP,)


@dataclass(frozen=True)
class ConflictFinding:
    """A cell (or pair of cells) whose joint actions contain a declared conflict."""

    pair: frozenset[str]
    cell: tuple[str, str]
    other_cell: tuple[str, str] | None = None

    def describe(self) -> str:
        a, b = sorted(self.pair)
        where = f"cell ({self.cell[0]}, {self.cell[1]})"
        if self.other_cell is not None:
            where += f" together with cell ({self.other_cell[0]}, {self.other_cell[1]})"
        return f"{a} conflicts with {b} in {where} and no override is declared"


def evaluate_matrix(
    matrix: DecisionMatrix, row: DegreeVector, col: DegreeVector
) -> list[ScoredCell]:
    """Score every cell with min(row degree, col degree), row-major order."""
    if row.variable_id != matrix.row_variable:
        raise VariableMismatch(
            f"matrix {matrix.id!r} rows are {matrix.row_variable!r}, got vector for {row.variable_id!r}"
        )
    if col.variable_id != matrix.col_variable:
        raise VariableMismatch(
            f"matrix {matrix.id!r} cols are {matrix.col_variable!r}, got vector for {col.variable_id!r}"
        )
    cells = []
    for r in matrix.row_labels():
        for c in matrix.col_labels():
            score = min(row.degree(r), col.degree(c))
            cells.append(ScoredCell(r, c, score, matrix.cells[(r, c)]))
    return cells


def select_actions(cells: list[ScoredCell], theta_fire: float = 0.5) -> set[str]:
    """Union of the actions of every cell scoring at least theta_fire.

    With vectors satisfying the NOTP complement law the best cell scores at
    least 0.5, so a threshold in (0, 0.5] always selects something.
    """
    if not 0.0 < theta_fire <= 0.5:
        raise ValueError(f"theta_fire must be in (0, 0.5], got {theta_fire}")
    selected: set[str] = set()
    for cell in cells:
        if cell.score >= theta_fire:
            selected |= cell.actions.actions
    return selected


def detect_incompatibilities(
    matrix: DecisionMatrix, decls: list[IncompatibilityDecl]
) -> list[ConflictFinding]:
    """Scan cells for declared conflicts that lack an override.

    A pair found inside a single cell is reported per cell.  A pair that only
    arises when two cells co-fire is reported once, naming the first such pair
    of cells in row-major order; this over-approximates runtime co-firing on
    purpose so a director sees every configuration needing a ruling.
    """
    findings: list[ConflictFinding] = []
    ordered = [
        (r, c) for r in matrix.row_labels() for c in matrix.col_labels()
    ]
    for decl in decls:
        if decl.override is not None:
            continue
        in_cell = [key for key in ordered if decl.pair <= matrix.cells[key].actions]
        if in_cell:
            for key in in_cell:
                findings.append(ConflictFinding(decl.pair, key))
            continue
        found = None
        for i, key_a in enumerate(ordered):
            for key_b in ordered[i + 1 :]:
                union = matrix.cells[key_a].actions | matrix.cells[key_b].actions
                if decl.pair <= union:
                    found = ConflictFinding(decl.pair, key_a, key_b)
                    break
            if found:
                break
        if found:
            findings.append(found)
    return findings


def apply_overrides(
    selected: set[str],
    decls: list[IncompatibilityDecl],
    holds: Callable[[tuple[str, str, object]], bool] | None = None,
) -> set[str]:
    """Resolve declared conflicts inside a fired action set.

    When a declared pair is present and its ``when`` condition holds (or it is
    unconditional), the pair is replaced by the declared override set.  Pairs
    without an override pass through untouched; the validator already flagged
    them.
    """
    result = set(selected)
    for decl in decls:
        if decl.override is None or not decl.pair <= result:
            continue
        if decl.when is not None and holds is not None and not holds(decl.when):
            continue
        result -= decl.pair
        result |= decl.override.actions
    return result
