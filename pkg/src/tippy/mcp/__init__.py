"""JSON-RPC 2.0 message handling, the MCP tool lifecycle, and transports."""

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
from .server import CallContext, McpServer, ToolDescriptor
from .transport import StdioTransport, serve_stdio
from .client import McpClient, ToolOutcome

__all__ = [
    "PARSE_ERROR", "INVALID_REQUEST", "METHOD_NOT_FOUND", "INVALID_PARAMS", "INTERNAL_ERROR",
    "PROTOCOL_VERSION", "error_response", "result_response",
    "CallContext", "McpServer", "ToolDescriptor",
    "StdioTransport", "serve_stdio", "McpClient", "ToolOutcome",
]
