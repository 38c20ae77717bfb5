"""Context-window management: budgeted truncation that keeps the system
message and the newest suffix, replacing everything dropped with one marker."""

from __future__ import annotations

import math

from ..errors import ConfigurationError
from .state import Message

DEFAULT_BUDGET_TOKENS = 8000


def estimate_tokens(message: Message) -> int:
    return math.ceil(len(message.content) / 4)


def truncate_context(messages: list[Message], budget_tokens: int = DEFAULT_BUDGET_TOKENS) -> list[Message]:
    """Keep the system message plus the newest messages that fit the budget.

    When anything is dropped, a single synthetic "[[elided N messages]]"
    marker (not counted against the budget) takes its place; retained order
    is preserved.
    """
    if not messages:
        return []
    system = messages[0] if messages[0].role == "system" else None
    rest = messages[1:] if system is not None else list(messages)
    budget = budget_tokens
    if system is not None:
        budget -= estimate_tokens(system)
        if budget < 0:
            raise ConfigurationError(
                f"budget {budget_tokens} below system message estimate {estimate_tokens(system)}"
            )
    kept: list[Message] = []
    used = 0
    for message in reversed(rest):
        cost = estimate_tokens(message)
        if used + cost > budget:
            break
        used += cost
        kept.append(message)
    kept.reverse()
    dropped = len(rest) - len(kept)
    out: list[Message] = []
    if system is not None:
        out.append(system)
    if dropped > 0:
        out.append(Message(role="system", content=f"[[elided {dropped} messages]]"))
    out.extend(kept)
    return out
