"""Native trace spans over the virtual clock.

Spans buffer per conversation and flush to traces.jsonl one line per span at
end_span; a crash loses only open spans.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import TracingError

SPAN_KINDS = ("turn", "model_call", "tool_call", "handoff", "guardrail")


@dataclass
class TraceSpan:
    span_id: str
    conversation_id: str
    kind: str
    name: str
    start_s: float
    end_s: float | None = None
    parent_span_id: str | None = None
    status: str = "ok"
    attributes: dict = field(default_factory=dict)

    @property
    def closed(self) -> bool:
        return self.end_s is not None

    def to_dict(self) -> dict:
        return {
            "span_id": self.span_id,
            "parent_span_id": self.parent_span_id,
            "conversation_id": self.conversation_id,
            "kind": self.kind,
            "name": self.name,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "status": self.status,
            "attributes": self.attributes,
        }


class Tracer:
    def __init__(self, clock, path: Path | str | None = None):
        self._clock = clock
        self.path = Path(path) if path is not None else None
        self._spans: dict[str, list[TraceSpan]] = {}  # conversation -> spans (open + closed)
        self._counter = 0
        self._lock = threading.Lock()  # single serialized file sink

    def begin_span(self, conversation_id: str, kind: str, name: str,
                   parent: TraceSpan | None = None, **attributes) -> TraceSpan:
        if kind not in SPAN_KINDS:
            raise TracingError(f"unknown span kind {kind!r}")
        with self._lock:
            self._counter += 1
            span = TraceSpan(
                span_id=f"s{self._counter:06d}",
                conversation_id=conversation_id,
                kind=kind,
                name=name,
                start_s=self._clock.now_s,
                parent_span_id=parent.span_id if parent else None,
                attributes=dict(attributes),
            )
            self._spans.setdefault(conversation_id, []).append(span)
            return span

    def end_span(self, span: TraceSpan, status: str = "ok", **attributes) -> TraceSpan:
        with self._lock:
            if span.closed:
                raise TracingError(f"span {span.span_id} already ended")
            span.end_s = max(self._clock.now_s, span.start_s)
            span.status = status
            span.attributes.update(attributes)
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(span.to_dict(), sort_keys=True) + "\n")
            return span

    def spans_for(self, conversation_id: str) -> list[TraceSpan]:
        return list(self._spans.get(conversation_id, []))

    def tree_for(self, conversation_id: str) -> list[dict]:
        """Root spans with nested children, in start order."""
        return build_tree([s.to_dict() for s in self.spans_for(conversation_id) if s.closed])


def build_tree(span_dicts: list[dict]) -> list[dict]:
    by_id = {s["span_id"]: {**s, "children": []} for s in span_dicts}
    roots = []
    for span in by_id.values():
        parent_id = span.get("parent_span_id")
        if parent_id and parent_id in by_id:
            by_id[parent_id]["children"].append(span)
        else:
            roots.append(span)
    for span in by_id.values():
        span["children"].sort(key=lambda s: (s["start_s"], s["span_id"]))
    roots.sort(key=lambda s: (s["start_s"], s["span_id"]))
    return roots


def load_trace_file(path: Path | str) -> dict[str, list[dict]]:
    """Replay traces.jsonl into per-conversation span lists."""
    out: dict[str, list[dict]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        span = json.loads(line)
        out.setdefault(span["conversation_id"], []).append(span)
    return out
