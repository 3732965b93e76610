"""Decision matrices: scoring, selection, incompatibility detection."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from dramatis.fuzzy import NOTP, DegreeVector, fuzzify
from dramatis.matrix import (
    ActionSet,
    DecisionMatrix,
    IncompatibilityDecl,
    VariableMismatch,
    apply_overrides,
    detect_incompatibilities,
    evaluate_matrix,
    select_actions,
)

ROWS = ("very_angry", "not_very_angry", "slightly_angry")
COLS = ("turns", "walks", "runs")

# The full 4x4 table: joint reactions of the bystander (A*), the drunk guy
# blocking the way (B*), and the drunk guy's own temper (C1).
TABLE = {
    ("very_angry", "turns"): {"A1", "B1"},
    ("very_angry", "walks"): {"A1", "B2"},
    ("very_angry", "runs"): {"A1", "B3.1"},
    ("very_angry", NOTP): {"A1"},
    ("not_very_angry", "turns"): {"A2", "B1"},
    ("not_very_angry", "walks"): {"A2", "B2"},
    ("not_very_angry", "runs"): {"A2", "B3"},
    ("not_very_angry", NOTP): {"A2"},
    ("slightly_angry", "turns"): {"A3", "B1"},
    ("slightly_angry", "walks"): {"A3", "B2"},
    ("slightly_angry", "runs"): {"A3", "B3"},
    ("slightly_angry", NOTP): {"A3"},
    (NOTP, "turns"): {"C1", "B1"},
    (NOTP, "walks"): {"C1", "B2"},
    (NOTP, "runs"): {"C1", "B3"},
    (NOTP, NOTP): {"C1", "A1"},
}


def make_matrix(cells=None) -> DecisionMatrix:
    cells = cells or TABLE
    return DecisionMatrix(
        "table_reaction", "anger", "approach", ROWS, COLS,
        {key: ActionSet(frozenset(value)) for key, value in cells.items()},
    )


def one_hot(variable_id: str, terms: tuple[str, ...], hot: str) -> DegreeVector:
    degrees = {t: (1.0 if t == hot else 0.0) for t in terms}
    notp = 1.0 if hot == NOTP else 0.0
    return DegreeVector(variable_id, degrees, notp)


def scores_by_cell(cells):
    return {(c.row_term, c.col_term): c.score for c in cells}


class TestEvaluate:
    def test_crisp_very_runs(self):
        m = make_matrix()
        cells = evaluate_matrix(m, one_hot("anger", ROWS, "very_angry"),
                                one_hot("approach", COLS, "runs"))
        best = max(cells, key=lambda c: c.score)
        assert best.score == 1.0
        assert best.actions.actions == frozenset({"A1", "B3.1"})

    def test_crisp_notp_notp(self):
        m = make_matrix()
        cells = evaluate_matrix(m, one_hot("anger", ROWS, NOTP),
                                one_hot("approach", COLS, NOTP))
        best = max(cells, key=lambda c: c.score)
        assert best.score == 1.0
        assert best.actions.actions == frozenset({"C1", "A1"})

    def test_fuzzy_scores_match_brute_force(self):
        m = make_matrix()
        row = DegreeVector("anger", {"very_angry": 0.6, "not_very_angry": 0.4,
                                     "slightly_angry": 0.0}, 0.4)
        col = DegreeVector("approach", {"turns": 0.0, "walks": 1.0, "runs": 0.0}, 0.0)
        got = scores_by_cell(evaluate_matrix(m, row, col))
        # independent oracle: min over the raw degree tables, all 16 cells
        for r in ROWS + (NOTP,):
            for c in COLS + (NOTP,):
                rd = row.notp if r == NOTP else row.degrees[r]
                cd = col.notp if c == NOTP else col.degrees[c]
                assert got[(r, c)] == pytest.approx(min(rd, cd))
        assert got[("very_angry", "walks")] == pytest.approx(0.6)
        assert got[("not_very_angry", "walks")] == pytest.approx(0.4)
        others = [v for k, v in got.items()
                  if k not in (("very_angry", "walks"),)]
        assert all(v <= 0.4 + 1e-12 for v in others)

    def test_row_major_ordering(self):
        m = make_matrix()
        cells = evaluate_matrix(m, one_hot("anger", ROWS, "very_angry"),
                                one_hot("approach", COLS, "turns"))
        expected = [(r, c) for r in ROWS + (NOTP,) for c in COLS + (NOTP,)]
        assert [(c.row_term, c.col_term) for c in cells] == expected

    def test_variable_mismatch(self):
        m = make_matrix()
        with pytest.raises(VariableMismatch):
            evaluate_matrix(m, one_hot("approach", COLS, "turns"),
                            one_hot("approach", COLS, "turns"))


class TestSelect:
    def test_crisp_slightly_turns(self):
        m = make_matrix()
        cells = evaluate_matrix(m, one_hot("anger", ROWS, "slightly_angry"),
                                one_hot("approach", COLS, "turns"))
        assert select_actions(cells, 0.5) == {"A3", "B1"}

    def test_fuzzy_union_at_half(self):
        m = make_matrix()
        row = DegreeVector("anger", {"very_angry": 0.6, "not_very_angry": 0.4,
                                     "slightly_angry": 0.0}, 0.4)
        col = DegreeVector("approach", {"turns": 0.0, "walks": 1.0, "runs": 0.0}, 0.0)
        assert select_actions(evaluate_matrix(m, row, col), 0.5) == {"A1", "B2"}

    def test_crisp_notp_corner(self):
        m = make_matrix()
        cells = evaluate_matrix(m, one_hot("anger", ROWS, NOTP),
                                one_hot("approach", COLS, NOTP))
        assert select_actions(cells, 0.5) == {"C1", "A1"}

    def test_threshold_domain(self):
        m = make_matrix()
        cells = evaluate_matrix(m, one_hot("anger", ROWS, NOTP),
                                one_hot("approach", COLS, NOTP))
        for bad in (0.0, 0.6, 1.0, -0.1):
            with pytest.raises(ValueError):
                select_actions(cells, bad)


class TestAllCrispCorners:
    def test_table_reproduced_cell_for_cell(self):
        m = make_matrix()
        for r in ROWS + (NOTP,):
            for c in COLS + (NOTP,):
                cells = evaluate_matrix(m, one_hot("anger", ROWS, r),
                                        one_hot("approach", COLS, c))
                exact_one = [cell for cell in cells if cell.score == 1.0]
                assert len(exact_one) == 1
                assert all(cell.score == 0.0 for cell in cells
                           if (cell.row_term, cell.col_term) != (r, c))
                assert select_actions(cells, 0.5) == TABLE[(r, c)]


class TestIncompatibilities:
    # the replacement set stands in for the whole conflicting pair
    decl = IncompatibilityDecl(frozenset({"A1", "B3"}),
                               override=ActionSet.of("A1", "B3.1"))
    bare = IncompatibilityDecl(frozenset({"A1", "B3"}))

    def test_overridden_table_is_clean(self):
        assert detect_incompatibilities(make_matrix(), [self.decl]) == []

    def test_edited_cell_yields_exactly_one_finding(self):
        cells = dict(TABLE)
        cells[("very_angry", "runs")] = {"A1", "B3"}
        findings = detect_incompatibilities(make_matrix(cells), [self.bare])
        assert len(findings) == 1
        assert findings[0].cell == ("very_angry", "runs")
        assert findings[0].pair == frozenset({"A1", "B3"})

    def test_no_declarations_no_findings(self):
        assert detect_incompatibilities(make_matrix(), []) == []

    def test_union_only_conflict_without_override(self):
        # A1 and B3 never share a cell here but can co-fire across cells
        findings = detect_incompatibilities(make_matrix(), [self.bare])
        assert len(findings) == 1
        assert findings[0].other_cell is not None

    def test_override_closure(self):
        cells = dict(TABLE)
        cells[("very_angry", "runs")] = {"A1", "B3"}
        matrix = make_matrix(cells)
        findings = detect_incompatibilities(matrix, [self.bare])
        assert findings
        fixed = [IncompatibilityDecl(f.pair, override=ActionSet.of("B3.1"))
                 for f in findings]
        assert detect_incompatibilities(matrix, fixed) == []

    def test_runtime_override_substitution(self):
        selected = {"A1", "B3", "C1"}
        resolved = apply_overrides(selected, [self.decl])
        assert resolved == {"A1", "B3.1", "C1"}
        assert "B3" not in resolved

    def test_conditional_override_respects_world(self):
        conditional = IncompatibilityDecl(
            frozenset({"A1", "B3"}),
            when=("bystander", "between_table", True),
            override=ActionSet.of("A1", "B3.1"),
        )
        def holds_false(triple):
            return False
        def holds_true(triple):
            return True
        assert apply_overrides({"A1", "B3"}, [conditional], holds_false) == {"A1", "B3"}
        assert apply_overrides({"A1", "B3"}, [conditional], holds_true) == {"A1", "B3.1"}


anger_x = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def make_intensity_variable(var_id: str):
    from dramatis.fuzzy import LinguisticVariable, PiecewiseLinear, Term

    return LinguisticVariable(var_id, (
        Term("slightly", PiecewiseLinear(((0.05, 0.0), (0.15, 1.0), (0.3, 1.0), (0.4, 0.0)))),
        Term("not_very", PiecewiseLinear(((0.3, 0.0), (0.45, 1.0), (0.6, 1.0), (0.7, 0.0)))),
        Term("very", PiecewiseLinear(((0.6, 0.0), (0.75, 1.0), (1.0, 1.0)))),
    ))


@given(anger_x, anger_x)
def test_floor_guarantee(x_row, x_col):
    terms = ("slightly", "not_very", "very")
    m = DecisionMatrix(
        "m", "anger", "approach", terms, terms,
        {(r, c): ActionSet.of("A1")
         for r in terms + (NOTP,) for c in terms + (NOTP,)},
    )
    row = fuzzify(make_intensity_variable("anger"), x_row)
    col = fuzzify(make_intensity_variable("approach"), x_col)
    cells = evaluate_matrix(m, row, col)
    assert max(c.score for c in cells) >= 0.5 - 1e-12
    assert select_actions(cells, 0.5) != set()


@given(st.dictionaries(st.sampled_from(ROWS + (NOTP,)), anger_x,
                       min_size=4, max_size=4),
       st.sampled_from(ROWS + (NOTP,)),
       st.floats(min_value=0.0, max_value=0.3, allow_nan=False))
def test_monotonicity_of_cell_scores(row_degrees, bump_term, bump):
    m = make_matrix()
    col = one_hot("approach", COLS, "walks")

    def vec(degrees):
        return DegreeVector("anger", {t: degrees[t] for t in ROWS}, degrees[NOTP])

    before = scores_by_cell(evaluate_matrix(m, vec(row_degrees), col))
    bumped = dict(row_degrees)
    bumped[bump_term] = min(1.0, bumped[bump_term] + bump)
    after = scores_by_cell(evaluate_matrix(m, vec(bumped), col))
    for key in before:
        assert after[key] >= before[key] - 1e-12
