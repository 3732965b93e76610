"""Linguistic variables and the possibility/necessity calculus.

Truth values are degrees in [0, 1].  Disjunction is max, conjunction is min,
and the complement of a set of alternatives ("none of the previous", NOTP)
is 1 minus the best alternative.  Everything here is pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass

#: Label of the computed complement entry in degree vectors and matrices.
NOTP = "NOTP"


def _check_degree(value: float, what: str = "degree") -> float:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{what} must be in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class PiecewiseLinear:
    """Membership function given as (x, mu) breakpoints with increasing x.

    Evaluation interpolates linearly between breakpoints and clamps to the
    nearest endpoint's mu outside the covered range.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise ValueError("membership needs at least 2 points")
        xs = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("membership x coordinates must be strictly increasing")
        for _, mu in self.points:
            _check_degree(mu, "membership value")

    def __call__(self, x: float) -> float:
        pts = self.points
        if x <= pts[0][0]:
            return pts[0][1]
        if x >= pts[-1][0]:
            return pts[-1][1]
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x0 <= x <= x1:
                t = (x - x0) / (x1 - x0)
                return y0 + t * (y1 - y0)
        raise AssertionError("unreachable: x inside range but no bracketing segment")


@dataclass(frozen=True)
class Term:
    """One value of a linguistic variable, e.g. "very_angry"."""

    id: str
    membership: PiecewiseLinear


@dataclass(frozen=True)
class LinguisticVariable:
    """A named quantity whose values are fuzzy terms over an intensity domain."""

    id: str
    terms: tuple[Term, ...]
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError(f"variable {self.id!r} needs at least one term")
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"empty domain for variable {self.id!r}")
        seen: set[str] = set()
        for term in self.terms:
            if term.id in seen:
                raise ValueError(f"duplicate term {term.id!r} in variable {self.id!r}")
            if term.id == NOTP:
                raise ValueError("NOTP is computed, never an authored term")
            seen.add(term.id)
            for x, _ in term.membership.points:
                if not lo <= x <= hi:
                    raise ValueError(
                        f"term {term.id!r} has a point at {x} outside [{lo}, {hi}]")

    def term_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.terms)

    def term(self, term_id: str) -> Term:
        for t in self.terms:
            if t.id == term_id:
                return t
        raise KeyError(term_id)


@dataclass(frozen=True)
class DegreeVector:
    """Per-term truth degrees for one variable, plus the NOTP complement.

    Vectors produced by :func:`fuzzify` always satisfy
    ``notp == 1 - max(term degrees)``.  The explicit constructor accepts any
    notp so diagnostic and matrix code can probe each axis independently.
    """

    variable_id: str
    degrees: dict[str, float]
    notp: float = 0.0

    def __post_init__(self) -> None:
        for term_id, d in self.degrees.items():
            _check_degree(d, f"degree of {term_id!r}")
        _check_degree(self.notp, "notp")

    @classmethod
    def from_degrees(cls, variable_id: str, degrees: dict[str, float]) -> DegreeVector:
        """Build a vector with notp derived as the complement of the best term."""
        return cls(variable_id, dict(degrees), notp_degree(list(degrees.values())))

    def degree(self, term_id: str) -> float:
        if term_id == NOTP:
            return self.notp
        return self.degrees.get(term_id, 0.0)

    def best(self) -> tuple[str, float]:
        """The strongest entry including NOTP; ties go to declaration order."""
        label, value = NOTP, self.notp
        for term_id, d in self.degrees.items():
            if d > value:
                label, value = term_id, d
        return label, value


@dataclass(frozen=True)
class PossibilityPair:
    """Dual measures bounding an event's likelihood: nec <= pos."""

    nec: float
    pos: float

    def __post_init__(self) -> None:
        _check_degree(self.nec, "nec")
        _check_degree(self.pos, "pos")
        if self.nec > self.pos:
            raise ValueError(f"nec {self.nec} exceeds pos {self.pos}")


def membership_degree(term: Term, x: float) -> float:
    """Degree to which x belongs to the term, clamped outside its breakpoints."""
    if x != x:
        raise ValueError("x must be finite")
    return term.membership(x)


def fuzzify(variable: LinguisticVariable, x: float) -> DegreeVector:
    """Evaluate every term of the variable at x and derive the NOTP complement."""
    degrees = {t.id: membership_degree(t, x) for t in variable.terms}
    return DegreeVector(variable.id, degrees, notp_degree(list(degrees.values())))


def notp_degree(degrees: list[float]) -> float:
    """Truth of "none of the previous": 1 - max, vacuously 1.0 for no options."""
    if not degrees:
        return 1.0
    best = max(degrees)
    _check_degree(best)
    return 1.0 - best


def necessity_from(pos_of_negation: float) -> float:
    """Necessity of a as the complement of the possibility of not-a."""
    _check_degree(pos_of_negation)
    return 1.0 - pos_of_negation


def combine_min(a: float, b: float) -> float:
    return min(_check_degree(a), _check_degree(b))


def combine_max(a: float, b: float) -> float:
    return max(_check_degree(a), _check_degree(b))


def check_consistency_bounds(nec: float, p: float, pos: float) -> bool:
    """Diagnostic: does an externally supplied estimate p sit between nec and pos."""
    _check_degree(nec)
    _check_degree(p)
    _check_degree(pos)
    return nec <= p <= pos
