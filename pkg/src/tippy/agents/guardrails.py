"""Deterministic guardrail filters: prompt-injection patterns, unsafe-content
terms, and a topical allowlist applied to inputs only.

Rules are plain text files (one entry per line) so verdicts are testable and
the rule set is swappable; precedence is injection > unsafe_content >
off_topic, first matching rule wins.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

_WS = re.compile(r"\s+")
_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass
class GuardrailVerdict:
    decision: str  # allow | block
    category: str | None = None  # prompt_injection | off_topic | unsafe_content
    matched_rule: str | None = None

    @property
    def blocked(self) -> bool:
        return self.decision == "block"

    def to_dict(self) -> dict:
        return {"decision": self.decision, "category": self.category, "matched_rule": self.matched_rule}


def _normalize(text: str) -> str:
    return _WS.sub(" ", text.lower()).strip()


def stem(token: str) -> str:
    if token.endswith("'s"):
        token = token[:-2]
    for suffix in ("ing", "ies", "ed", "es", "s"):
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    return token


def _load_lines(path: Path) -> list[str]:
    if not path.exists():
        return []
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line.lower())
    return out


class Guardrails:
    def __init__(self, rules_dir: Path | str, entity_terms_provider=None):
        """entity_terms_provider() -> iterable of known entity names/ids; a
        message that references one passes the topical check."""
        root = Path(rules_dir)
        self.injection_patterns = _load_lines(root / "injection_patterns.txt")
        self.unsafe_terms = _load_lines(root / "unsafe_terms.txt")
        self.topic_lexicon = _load_lines(root / "topic_lexicon.txt")
        self._lexicon_stems = {stem(tok) for entry in self.topic_lexicon for tok in _TOKEN.findall(entry)}
        self._entity_terms_provider = entity_terms_provider

    def guard_input(self, text: str) -> GuardrailVerdict:
        return self._scan(text, check_topic=True)

    def guard_output(self, text: str) -> GuardrailVerdict:
        return self._scan(text, check_topic=False)

    def _scan(self, text: str, check_topic: bool) -> GuardrailVerdict:
        normalized = _normalize(text)
        for pattern in self.injection_patterns:
            if pattern in normalized:
                return GuardrailVerdict("block", "prompt_injection", pattern)
        for term in self.unsafe_terms:
            if term in normalized:
                return GuardrailVerdict("block", "unsafe_content", term)
        if check_topic and not self._on_topic(normalized):
            return GuardrailVerdict("block", "off_topic", "topic_lexicon")
        return GuardrailVerdict("allow")

    def _on_topic(self, normalized: str) -> bool:
        stems = {stem(tok) for tok in _TOKEN.findall(normalized)}
        if stems & self._lexicon_stems:
            return True
        if self._entity_terms_provider is not None:
            for term in self._entity_terms_provider():
                if term and _normalize(str(term)) in normalized:
                    return True
        return False
