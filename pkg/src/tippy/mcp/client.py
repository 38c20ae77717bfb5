"""Multi-server MCP client: attaches to several servers, routes tool calls to
their owners over the JSON-RPC surface."""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import NotFoundError, TippyError
from .server import CallContext, McpServer


@dataclass
class ToolOutcome:
    text: str
    is_error: bool


class McpClient:
    """In-process client over handle_message; every call is a real JSON-RPC
    round trip so the wire contract stays exercised."""

    def __init__(self):
        self._servers: dict[str, McpServer] = {}
        self._tool_owner: dict[str, str] = {}
        self._next_id = 0

    def attach(self, server: McpServer) -> None:
        self._servers[server.name] = server
        self._rpc(server, "initialize", {})
        listing = self._rpc(server, "tools/list", {})
        for tool in listing["result"]["tools"]:
            self._tool_owner[tool["name"]] = server.name

    def owner_of(self, tool_name: str) -> str:
        owner = self._tool_owner.get(tool_name)
        if owner is None:
            raise NotFoundError(f"tool {tool_name!r} is not on any attached server")
        return owner

    def list_all_tools(self) -> dict[str, list[dict]]:
        out = {}
        for name, server in self._servers.items():
            out[name] = self._rpc(server, "tools/list", {})["result"]["tools"]
        return out

    def descriptor(self, tool_name: str):
        return self._servers[self.owner_of(tool_name)].descriptor(tool_name)

    def call_tool(self, tool_name: str, arguments: dict, ctx: CallContext | None = None) -> ToolOutcome:
        server = self._servers[self.owner_of(tool_name)]
        response = self._rpc(server, "tools/call", {"name": tool_name, "arguments": arguments}, ctx)
        if "error" in response:
            raise TippyError(f"rpc error {response['error']['code']}: {response['error']['message']}")
        result = response["result"]
        text = "".join(part.get("text", "") for part in result.get("content", []))
        return ToolOutcome(text=text, is_error=bool(result.get("isError")))

    def _rpc(self, server: McpServer, method: str, params: dict, ctx: CallContext | None = None) -> dict:
        self._next_id += 1
        frame = json.dumps({"jsonrpc": "2.0", "id": self._next_id, "method": method, "params": params})
        raw = server.handle_message(frame.encode("utf-8"), ctx)
        response = json.loads(raw.decode("utf-8"))
        if response.get("id") != self._next_id:
            raise TippyError("response id does not match request id")
        return response
