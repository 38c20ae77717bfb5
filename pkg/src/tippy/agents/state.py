"""Conversation state shared across turns and handoffs."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ValidationError

ROLES = ("system", "user", "assistant", "tool")


@dataclass
class Message:
    role: str
    content: str
    agent: str | None = None
    tool_call_id: str | None = None

    def to_dict(self) -> dict:
        out: dict = {"role": self.role, "content": self.content}
        if self.agent is not None:
            out["agent"] = self.agent
        if self.tool_call_id is not None:
            out["tool_call_id"] = self.tool_call_id
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "Message":
        return cls(role=raw["role"], content=raw["content"],
                   agent=raw.get("agent"), tool_call_id=raw.get("tool_call_id"))


@dataclass
class ConversationState:
    conversation_id: str
    messages: list[Message] = field(default_factory=list)
    shared_context: dict = field(default_factory=dict)
    active_agent: str = "supervisor"

    def check(self) -> None:
        if not self.messages or self.messages[0].role != "system":
            raise ValidationError("first message must have role system")
        known_calls = set()
        for message in self.messages:
            if message.role not in ROLES:
                raise ValidationError(f"unknown role {message.role!r}")
            if message.role == "tool":
                if message.tool_call_id is None or message.tool_call_id not in known_calls:
                    raise ValidationError("tool message must reference a prior tool call id")
            elif message.tool_call_id is not None:
                known_calls.add(message.tool_call_id)

    def to_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "messages": [m.to_dict() for m in self.messages],
            "shared_context": self.shared_context,
            "active_agent": self.active_agent,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ConversationState":
        return cls(
            conversation_id=raw["conversation_id"],
            messages=[Message.from_dict(m) for m in raw.get("messages", [])],
            shared_context=dict(raw.get("shared_context", {})),
            active_agent=raw.get("active_agent", "supervisor"),
        )
