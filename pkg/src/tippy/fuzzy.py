"""Fuzzy string scoring: Damerau-Levenshtein edit component vs token overlap."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ValidationError

_SEPARATORS = re.compile(r"[\s\-_]+")


def normalize(text: str) -> str:
    """Lowercase, collapse runs of whitespace / '-' / '_' to one space, strip."""
    return _SEPARATORS.sub(" ", text.lower()).strip()


def damerau_levenshtein(a: str, b: str) -> int:
    """Edit distance with adjacent transposition (optimal string alignment)."""
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev2: list[int] = []
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        row = [i] + [0] * lb
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            best = min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                best = min(best, prev2[j - 2] + 1)
            row[j] = best
        prev2, prev = prev, row
    return prev[lb]


def fuzzy_score(query: str, candidate: str) -> float:
    """max(edit component, token component) over normalized strings, in [0, 1]."""
    q = normalize(query)
    c = normalize(candidate)
    if not q or not c:
        raise ValidationError("empty string after normalization", ["query" if not q else "candidate"])
    edit = 1.0 - damerau_levenshtein(q, c) / max(len(q), len(c))
    q_tokens = set(q.split(" "))
    c_tokens = set(c.split(" "))
    token = len(q_tokens & c_tokens) / len(q_tokens | c_tokens)
    return max(edit, token)


@dataclass
class FuzzyMatch:
    candidate_id: str
    candidate_name: str
    score: float
    alternates: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "candidate_name": self.candidate_name,
            "score": round(self.score, 6),
            "alternates": self.alternates,
        }


def rank_candidates(query: str, candidates: list[tuple[str, str]]) -> list[tuple[float, str, str]]:
    """Score query against each (id, name), matching id and name both.

    Returns (score, id, name) sorted best-first, ties broken by id ascending.
    """
    scored = []
    for cid, name in candidates:
        score = max(fuzzy_score(query, name), fuzzy_score(query, cid))
        scored.append((score, cid, name))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return scored
