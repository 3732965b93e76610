"""Utterance-to-intent matching with synonym expansion.

A lexicon lists intents, each with canonical phrases and token equivalence
classes.  Matching is token-set Jaccard similarity after normalization and
synonym substitution: deterministic, dependency-free, and reproducible
bit-for-bit across platforms.  No stemming; synonym groups carry that burden
explicitly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

#: Default degree above which a match counts as a recognized intent.
ACCEPT_THRESHOLD = 0.6

# Expanded before punctuation stripping so apostrophes still carry meaning.
_CONTRACTIONS = [
    (re.compile(r"\bwon't\b"), "will not"),
    (re.compile(r"\bcan't\b"), "cannot"),
    (re.compile(r"\bshan't\b"), "shall not"),
    (re.compile(r"\b(\w+)n't\b"), r"\1 not"),
    (re.compile(r"\b(\w+)'re\b"), r"\1 are"),
    (re.compile(r"\b(\w+)'ve\b"), r"\1 have"),
    (re.compile(r"\b(\w+)'ll\b"), r"\1 will"),
    (re.compile(r"\b(\w+)'d\b"), r"\1 would"),
    (re.compile(r"\bi'm\b"), "i am"),
    (re.compile(r"\blet's\b"), "let us"),
    (re.compile(r"\b(\w+)'s\b"), r"\1 is"),
]

_NON_WORD = re.compile(r"[^a-z0-9]+")


def normalize(text: str) -> list[str]:
    """Lowercase, expand contractions, strip punctuation, split on whitespace."""
    out = text.lower()
    for pattern, repl in _CONTRACTIONS:
        out = pattern.sub(repl, out)
    out = _NON_WORD.sub(" ", out)
    return out.split()


@dataclass(frozen=True)
class Intent:
    """A unit of meaning with its accepted phrasings.

    ``synonym_groups`` are equivalence classes of tokens; every member maps to
    the group's first token before comparison.
    """

    id: str
    phrases: tuple[str, ...]
    synonym_groups: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if not self.phrases or not any(normalize(p) for p in self.phrases):
            raise ValueError(f"intent {self.id!r} has no usable phrase")

    def canon(self) -> dict[str, str]:
        mapping: dict[str, str] = {}
        for group in self.synonym_groups:
            head = group[0]
            for token in group:
                mapping[token] = head
        return mapping


@dataclass(frozen=True)
class Lexicon:
    intents: tuple[Intent, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for intent in self.intents:
            if intent.id in seen:
                raise ValueError(f"duplicate intent id {intent.id!r}")
            seen.add(intent.id)

    def intent(self, intent_id: str) -> Intent:
        for i in self.intents:
            if i.id == intent_id:
                return i
        raise KeyError(intent_id)

    def intent_ids(self) -> tuple[str, ...]:
        return tuple(i.id for i in self.intents)


@dataclass(frozen=True)
class MatchResult:
    intent_id: str
    degree: float
    best_phrase: str


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def match_intent(utterance: str, lexicon: Lexicon) -> list[MatchResult]:
    """Score every intent against the utterance, best first.

    Per intent, the degree is the max over its phrases of the Jaccard
    similarity of token sets, both sides mapped through the intent's synonym
    groups.  Ties keep lexicon declaration order.
    """
    tokens = normalize(utterance)
    results: list[MatchResult] = []
    for intent in lexicon.intents:
        mapping = intent.canon()
        mapped = {mapping.get(t, t) for t in tokens}
        best_degree, best_phrase = 0.0, intent.phrases[0]
        for phrase in intent.phrases:
            phrase_tokens = {mapping.get(t, t) for t in normalize(phrase)}
            degree = _jaccard(mapped, phrase_tokens)
            if degree > best_degree:
                best_degree, best_phrase = degree, phrase
        results.append(MatchResult(intent.id, best_degree, best_phrase))
    results.sort(key=lambda r: -r.degree)
    return results


def intent_degrees(utterance: str, lexicon: Lexicon) -> dict[str, float]:
    """Degrees keyed by intent id, for callers that don't need the ranking."""
    return {r.intent_id: r.degree for r in match_intent(utterance, lexicon)}
