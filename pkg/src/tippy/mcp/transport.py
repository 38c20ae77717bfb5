"""Stdio framing: one JSON-RPC message per line, 4 MiB cap per frame."""

from __future__ import annotations

import sys

from ..errors import FrameError
from .server import CallContext, McpServer

MAX_FRAME_BYTES = 4 * 1024 * 1024


class StdioTransport:
    """Newline-delimited frames over a pair of binary streams."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer

    def read_frame(self) -> bytes | None:
        """Next frame, or None at end of stream; oversize lines raise FrameError."""
        line = self.reader.readline(MAX_FRAME_BYTES + 2)
        if not line:
            return None
        if len(line) > MAX_FRAME_BYTES:
            # drain the rest of the oversized line so the stream can recover
            while True:
                rest = self.reader.readline(MAX_FRAME_BYTES)
                if not rest or rest.endswith(b"\n"):
                    break
            raise FrameError(f"frame exceeds {MAX_FRAME_BYTES} bytes")
        return line.rstrip(b"\r\n")

    def write_frame(self, payload: bytes) -> None:
        if b"\n" in payload:
            raise FrameError("frame must not contain embedded newlines")
        self.writer.write(payload + b"\n")
        self.writer.flush()


def serve_stdio(server: McpServer, reader=None, writer=None, ctx: CallContext | None = None) -> None:
    """Blocking serve loop; returns at end of stream."""
    transport = StdioTransport(
        reader if reader is not None else sys.stdin.buffer,
        writer if writer is not None else sys.stdout.buffer,
    )
    while True:
        try:
            frame = transport.read_frame()
        except FrameError as exc:
            from .messages import PARSE_ERROR, error_response
            import json
            transport.write_frame(json.dumps(error_response(None, PARSE_ERROR, str(exc))).encode())
            continue
        if frame is None:
            return
        if not frame.strip():
            continue
        response = server.handle_message(frame, ctx)
        if response is not None:
            transport.write_frame(response)
