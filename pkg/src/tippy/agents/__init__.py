"""Supervisor-pattern agent runtime: turn loop, handoffs, guardrails,
context-window management."""

from .profiles import AGENT_NAMES, AgentProfile, load_profiles
from .state import ConversationState, Message
from .guardrails import GuardrailVerdict, Guardrails
from .context import truncate_context
from .runtime import AgentRuntime, PendingTurn, TurnLimits, TurnResult

__all__ = [
    "AGENT_NAMES", "AgentProfile", "load_profiles",
    "ConversationState", "Message",
    "GuardrailVerdict", "Guardrails",
    "truncate_context",
    "AgentRuntime", "PendingTurn", "TurnLimits", "TurnResult",
]
