"""The MCP server core: tool registry, lifecycle methods, and dispatch.

Transport-agnostic: handle_message takes one raw frame and returns the
response payload (or None for notifications). The tool registry is immutable
after startup; world mutation happens inside the handlers, which serialize
through the engine's lock.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import RegistrationError, TippyError, ValidationError
from ..schema import ParameterSchema
from . import messages
from .messages import (
    INTERNAL_ERROR,
    INVALID_PARAMS,
    INVALID_REQUEST,
    METHOD_NOT_FOUND,
    PARSE_ERROR,
    PROTOCOL_VERSION,
    error_response,
    result_response,
)

CATEGORIES = ("job", "lab", "document", "workflow", "actor_asset")


@dataclass
class ToolDescriptor:
    name: str
    description: str
    input_schema: ParameterSchema
    category: str
    requires_approval: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "input_schema": self.input_schema.to_dict(),
            "category": self.category,
            "requires_approval": self.requires_approval,
        }


@dataclass
class CallContext:
    user_id: str = "u1"
    conversation_id: str = ""
    trace_parent: str | None = None


class McpServer:
    def __init__(self, name: str, version: str = "0.1.0"):
        self.name = name
        self.version = version
        self._tools: dict[str, tuple[ToolDescriptor, object]] = {}

    def register_tool(self, descriptor: ToolDescriptor, handler) -> None:
        """handler(arguments: dict, ctx: CallContext) -> str (text content)."""
        if descriptor.name in self._tools:
            raise RegistrationError(f"tool {descriptor.name!r} already registered")
        if descriptor.category not in CATEGORIES:
            raise RegistrationError(f"unknown category {descriptor.category!r}")
        self._tools[descriptor.name] = (descriptor, handler)

    def tool_names(self) -> list[str]:
        return list(self._tools)

    def descriptor(self, name: str) -> ToolDescriptor | None:
        entry = self._tools.get(name)
        return entry[0] if entry else None

    # --- message handling ---

    def handle_message(self, raw: bytes | str, ctx: CallContext | None = None) -> bytes | None:
        """One frame in, at most one frame out; notifications never answer."""
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                return _encode(error_response(None, PARSE_ERROR, "invalid UTF-8"))
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            return _encode(error_response(None, PARSE_ERROR, f"parse error: {exc.msg}"))
        response = self.handle_obj(msg, ctx)
        return None if response is None else _encode(response)

    def handle_obj(self, msg, ctx: CallContext | None = None) -> dict | None:
        kind = messages.classify(msg)
        if kind == "invalid":
            msg_id = msg.get("id") if isinstance(msg, dict) else None
            return error_response(msg_id, INVALID_REQUEST, "not a valid JSON-RPC request")
        method = msg["method"]
        params = msg.get("params") or {}
        msg_id = msg.get("id")
        is_notification = kind == "notification"

        if method == "initialize":
            result = {
                "protocol_version": PROTOCOL_VERSION,
                "server_info": {"name": self.name, "version": self.version},
                "capabilities": {"tools": {}},
            }
        elif method == "notifications/initialized":
            return None
        elif method == "tools/list":
            result = {"tools": [desc.to_dict() for desc, _ in self._tools.values()]}
        elif method == "tools/call":
            if is_notification:
                return None
            return self._handle_call(msg_id, params, ctx or CallContext())
        else:
            if is_notification:
                return None
            return error_response(msg_id, METHOD_NOT_FOUND, f"unknown method {method!r}")
        return None if is_notification else result_response(msg_id, result)

    def _handle_call(self, msg_id, params: dict, ctx: CallContext) -> dict:
        if not isinstance(params, dict):
            return error_response(msg_id, INVALID_PARAMS, "params must be an object")
        name = params.get("name")
        arguments = params.get("arguments") or {}
        entry = self._tools.get(name)
        if entry is None:
            return error_response(msg_id, INVALID_PARAMS, f"unknown tool {name!r}")
        descriptor, handler = entry
        problems = descriptor.input_schema.validate(arguments)
        if problems:
            return error_response(
                msg_id, INVALID_PARAMS,
                "invalid arguments: " + "; ".join(problems),
                data={"fields": [p.split(":", 1)[0] for p in problems]},
            )
        try:
            text = handler(arguments, ctx)
        except ValidationError as exc:
            # schema violations inside the handler (e.g. nested job parameters)
            # surface as invalid-params, same as descriptor-level failures
            return error_response(msg_id, INVALID_PARAMS, str(exc), data={"fields": exc.fields})
        except TippyError as exc:
            return result_response(msg_id, {
                "content": [{"type": "text", "text": str(exc)}],
                "isError": True,
            })
        except Exception as exc:  # defensive: handler bugs become RPC errors
            return error_response(msg_id, INTERNAL_ERROR, f"internal error: {exc}")
        return result_response(msg_id, {
            "content": [{"type": "text", "text": text}],
            "isError": False,
        })


def _encode(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True).encode("utf-8")
