"""HTTP gateway: chat, job monitoring, approvals, event streaming, and the
MCP-over-HTTP mount.

Static bearer-token auth on every /api/* route except /api/health; /mcp is
the protocol mount used by external MCP clients. The event stream uses
text/event-stream framing and pushes events in engine emission order.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .app import TippyApp
from .errors import (
    ConflictError,
    ConversationBusyError,
    NotFoundError,
    PermissionDeniedError,
    TippyError,
)

MAX_CHAT_BODY = 64 * 1024
TOKEN_ENV = "TIPPY_API_TOKEN"
DEFAULT_TOKEN = "tippy-dev-token"
ADDR_ENV = "TIPPY_HTTP_ADDR"
CLOCK_SCALE_ENV = "TIPPY_CLOCK_SCALE"


def api_token() -> str:
    return os.environ.get(TOKEN_ENV, DEFAULT_TOKEN)


class GatewayHandler(BaseHTTPRequestHandler):
    app: TippyApp = None  # set by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    # --- helpers ---

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _authorized(self) -> bool:
        header = self.headers.get("Authorization", "")
        return header == f"Bearer {api_token()}"

    def _reject_unauthorized(self) -> bool:
        if self._authorized():
            return False
        self._send_json(401, {"error": "missing or invalid bearer token"})
        return True

    def _read_body(self, limit: int | None = None) -> bytes | None:
        length = int(self.headers.get("Content-Length") or 0)
        if limit is not None and length > limit:
            self._send_json(413, {"error": f"body exceeds {limit} bytes"})
            return None
        return self.rfile.read(length)

    # --- routing ---

    def do_GET(self):
        parsed = urlparse(self.path)
        path = parsed.path.rstrip("/") or "/"
        query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
        if path == "/api/health":
            self._send_json(200, {"status": "ok", "now_s": self.app.engine.clock.now_s})
            return
        if not path.startswith("/api"):
            self._send_json(404, {"error": "not found"})
            return
        if self._reject_unauthorized():
            return
        if path == "/api/jobs":
            self._get_jobs(query)
        elif path.startswith("/api/jobs/"):
            self._get_job(path.split("/")[-1])
        elif path == "/api/labs":
            labs = [{"lab_id": l.id, "name": l.name, "site": l.site, "status": l.status}
                    for l in sorted(self.app.world.labs.values(), key=lambda x: x.id)]
            self._send_json(200, {"labs": labs})
        elif path == "/api/approvals":
            self._send_json(200, {"approvals": self.app.pending_approvals(query.get("state", "pending"))})
        elif path.startswith("/api/traces/"):
            self._send_json(200, {"conversation_id": path.split("/")[-1],
                                  "spans": self.app.traces(path.split("/")[-1])})
        elif path == "/api/events":
            self._stream_events()
        else:
            self._send_json(404, {"error": "not found"})

    def do_POST(self):
        parsed = urlparse(self.path)
        path = parsed.path.rstrip("/")
        if path == "/mcp":
            body = self._read_body()
            if body is None:
                return
            response = self.app.lab_server.handle_message(body)
            if response is None:
                self.send_response(204)
                self.send_header("Content-Length", "0")
                self.end_headers()
                return
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(response)))
            self.end_headers()
            self.wfile.write(response)
            return
        if not path.startswith("/api"):
            self._send_json(404, {"error": "not found"})
            return
        if self._reject_unauthorized():
            return
        if path == "/api/chat":
            self._post_chat()
        elif path.startswith("/api/approvals/"):
            self._post_approval(path.split("/")[-1])
        else:
            self._send_json(404, {"error": "not found"})

    # --- endpoints ---

    def _get_jobs(self, query: dict) -> None:
        def num(name):
            return float(query[name]) if name in query else None

        jobs = self.app.engine.query_jobs(
            lab_id=query.get("lab_id"), workflow_id=query.get("workflow_id"),
            state=query.get("state"), created_after=num("created_after"),
            created_before=num("created_before"),
            limit=int(query["limit"]) if "limit" in query else None,
        )
        self._send_json(200, {"jobs": [self.app.engine.query_job_status(j.id) for j in jobs]})

    def _get_job(self, job_id: str) -> None:
        try:
            self._send_json(200, self.app.engine.query_job_status(job_id))
        except NotFoundError as exc:
            self._send_json(404, {"error": str(exc)})

    def _post_chat(self) -> None:
        body = self._read_body(limit=MAX_CHAT_BODY)
        if body is None:
            return
        try:
            payload = json.loads(body.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            self._send_json(422, {"error": "body must be a JSON object"})
            return
        text = (payload.get("text") or "").strip()
        if not text:
            self._send_json(422, {"error": "text must be non-empty"})
            return
        conversation_id = payload.get("conversation_id") or "default"
        user_id = payload.get("user_id") or "u1"
        try:
            result = self.app.chat(conversation_id, user_id, text)
        except ConversationBusyError as exc:
            self._send_json(409, {"error": str(exc)})
            return
        except NotFoundError as exc:
            self._send_json(404, {"error": str(exc)})
            return
        except TippyError as exc:
            self._send_json(400, {"error": str(exc)})
            return
        self._send_json(200, result)

    def _post_approval(self, approval_id: str) -> None:
        body = self._read_body()
        if body is None:
            return
        try:
            payload = json.loads(body.decode("utf-8")) if body else {}
        except json.JSONDecodeError:
            self._send_json(422, {"error": "body must be a JSON object"})
            return
        decision = payload.get("decision", "")
        user_id = payload.get("user_id") or "u1"
        try:
            result = self.app.resolve_approval(approval_id, decision, user_id)
        except NotFoundError as exc:
            self._send_json(404, {"error": str(exc)})
            return
        except ConflictError as exc:
            self._send_json(409, {"error": str(exc)})
            return
        except PermissionDeniedError as exc:
            self._send_json(403, {"error": str(exc)})
            return
        self._send_json(200, result)

    def _stream_events(self) -> None:
        q = self.app.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.end_headers()
            while True:
                try:
                    item = q.get(timeout=1.0)
                except queue.Empty:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                frame = (f"event: {item['event']}\n"
                         f"data: {json.dumps(item['data'], sort_keys=True)}\n\n")
                self.wfile.write(frame.encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            self.app.unsubscribe(q)


def make_server(app: TippyApp, listen: str = "127.0.0.1:8765") -> ThreadingHTTPServer:
    host, _, port = listen.rpartition(":")
    handler = type("BoundGatewayHandler", (GatewayHandler,), {"app": app})
    server = ThreadingHTTPServer((host or "127.0.0.1", int(port)), handler)
    server.daemon_threads = True
    return server


def serve(app: TippyApp, listen: str | None = None) -> None:
    """Blocking serve; TIPPY_CLOCK_SCALE > 0 maps wall seconds to virtual
    seconds via a background ticker."""
    listen = listen or os.environ.get(ADDR_ENV, "127.0.0.1:8765")
    server = make_server(app, listen)
    scale = float(os.environ.get(CLOCK_SCALE_ENV, "0") or 0)
    if scale > 0:
        def ticker():
            while True:
                time.sleep(1.0)
                app.tick(scale)

        threading.Thread(target=ticker, daemon=True).start()
    print(f"tippy gateway listening on {listen}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
