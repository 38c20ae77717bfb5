"""JSON-RPC 2.0 message shapes and error codes."""

from __future__ import annotations

PROTOCOL_VERSION = "2024-11-05"

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603


def result_response(msg_id, result) -> dict:
    return {"jsonrpc": "2.0", "id": msg_id, "result": result}


def error_response(msg_id, code: int, message: str, data=None) -> dict:
    error = {"code": code, "message": message}
    if data is not None:
        error["data"] = data
    return {"jsonrpc": "2.0", "id": msg_id, "error": error}


def classify(msg) -> str:
    """'request' | 'notification' | 'invalid' for a decoded message value."""
    if not isinstance(msg, dict):
        return "invalid"
    if msg.get("jsonrpc") != "2.0":
        return "invalid"
    method = msg.get("method")
    if not isinstance(method, str) or not method:
        return "invalid"
    if "id" in msg and msg["id"] is not None:
        if not isinstance(msg["id"], (str, int, float)):
            return "invalid"
        return "request"
    return "notification"
