"""Pluggable model interface: a deterministic scripted adapter for tests and
offline use, plus an optional remote HTTP adapter.

Both implementations enforce the scoping postcondition themselves: a returned
action may only reference the request's available tools and handoff targets;
violations surface as AdapterError, never as executions.
"""

from __future__ import annotations

import json
import re
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AdapterError, RuleLoadError, ValidationError

MODEL_MODE_ENV = "TIPPY_MODEL_MODE"
MODEL_BASE_URL_ENV = "TIPPY_MODEL_BASE_URL"
MODEL_API_KEY_ENV = "TIPPY_MODEL_API_KEY"

FALLBACK_TEXT = ("I could not map that request to a laboratory action. "
                 "Could you rephrase it in terms of labs, jobs, or molecules?")


@dataclass
class ToolCall:
    id: str
    tool_name: str
    arguments: dict


@dataclass
class ModelAction:
    """Exactly one of final_text / tool_calls / handoff is set."""
    final_text: str | None = None
    tool_calls: list[ToolCall] | None = None
    handoff: dict | None = None  # {"target": agent, "reason": text}

    def check(self) -> None:
        filled = sum(x is not None for x in (self.final_text, self.tool_calls, self.handoff))
        if filled != 1:
            raise ValidationError("exactly one action variant must be set")
        if self.tool_calls is not None:
            ids = [c.id for c in self.tool_calls]
            if len(ids) != len(set(ids)):
                raise ValidationError("tool call ids must be unique within an action")


@dataclass
class ModelRequest:
    agent: str
    messages: list  # post-truncation Message list
    available_tools: list  # ToolDescriptor list
    available_handoffs: list[str] = field(default_factory=list)


class ModelAdapter:
    def complete(self, request: ModelRequest) -> ModelAction:
        raise NotImplementedError


def enforce_scoping(action: ModelAction, request: ModelRequest) -> ModelAction:
    action.check()
    if action.tool_calls is not None:
        allowed = {d.name for d in request.available_tools}
        for call in action.tool_calls:
            if call.tool_name not in allowed:
                raise AdapterError(
                    f"adapter returned out-of-scope tool {call.tool_name!r} for agent {request.agent}"
                )
    if action.handoff is not None:
        target = action.handoff.get("target")
        if target not in request.available_handoffs:
            raise AdapterError(
                f"adapter returned illegal handoff target {target!r} for agent {request.agent}"
            )
    return action


# --- scripted rules ---

@dataclass
class Rule:
    agent: str  # agent name or "*"
    pattern: str
    action_kind: str  # final | tool | handoff
    payload: object  # str for final, parsed JSON otherwise
    line_no: int
    regex: re.Pattern | None = None  # anchored wildcard patterns only


_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def load_rule_table(path: Path | str) -> list[Rule]:
    """Tab-separated rules: agent, pattern, action, payload. First match wins.

    Patterns containing {name} groups are anchored wildcards; everything else
    is a case-insensitive substring test.
    """
    rules: list[Rule] = []
    text = Path(path).read_text(encoding="utf-8")
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise RuleLoadError(line_no, f"expected 4 tab-separated fields, got {len(parts)}")
        agent = parts[0].strip()
        pattern = parts[1].strip()
        action_kind = parts[2].strip()
        payload_text = parts[3].strip()
        if action_kind not in ("final", "tool", "handoff"):
            raise RuleLoadError(line_no, f"unknown action {action_kind!r}")
        if not pattern:
            raise RuleLoadError(line_no, "empty pattern")
        regex = _compile_wildcard(pattern, line_no) if "{" in pattern else None
        if action_kind == "final":
            payload: object = payload_text
        else:
            try:
                payload = json.loads(payload_text)
            except json.JSONDecodeError as exc:
                raise RuleLoadError(line_no, f"payload is not valid JSON: {exc.msg}") from exc
            if action_kind == "handoff" and not isinstance(payload, dict):
                raise RuleLoadError(line_no, "handoff payload must be an object")
            if action_kind == "tool" and not isinstance(payload, list):
                raise RuleLoadError(line_no, "tool payload must be a list of calls")
        rules.append(Rule(agent=agent, pattern=pattern, action_kind=action_kind,
                          payload=payload, line_no=line_no, regex=regex))
    return rules


def _compile_wildcard(pattern: str, line_no: int) -> re.Pattern:
    out = []
    pos = 0
    names = set()
    for match in _PLACEHOLDER.finditer(pattern):
        out.append(re.escape(pattern[pos:match.start()]))
        name = match.group(1)
        if name in names:
            raise RuleLoadError(line_no, f"duplicate capture name {name!r}")
        names.add(name)
        out.append(f"(?P<{name}>.*?)")
        pos = match.end()
    tail = pattern[pos:]
    if "{" in tail or "}" in tail:
        raise RuleLoadError(line_no, "unbalanced braces in pattern")
    out.append(re.escape(tail))
    try:
        return re.compile("^" + "".join(out) + "$", re.IGNORECASE | re.DOTALL)
    except re.error as exc:
        raise RuleLoadError(line_no, f"bad pattern: {exc}") from exc


class ScriptedModel(ModelAdapter):
    """Deterministic table-driven stand-in for a reasoning model.

    The match text is "[role] content" of the newest non-handoff-marker
    message, so rules can key on user turns, tool results, and specialist
    replies separately.
    """

    def __init__(self, rules: list[Rule]):
        self.rules = rules

    @classmethod
    def from_file(cls, path: Path | str) -> "ScriptedModel":
        return cls(load_rule_table(path))

    def complete(self, request: ModelRequest) -> ModelAction:
        match_text, last_content, context = _match_context(request)
        for rule in self.rules:
            if rule.agent not in ("*", request.agent):
                continue
            captures = _match_rule(rule, match_text)
            if captures is None:
                continue
            captures["last"] = last_content
            action = _build_action(rule, captures, context)
            return enforce_scoping(action, request)
        return ModelAction(final_text=FALLBACK_TEXT)


CONTEXT_PREFIX = "[context] "
MEMORY_PREFIX = "[memory] "
HANDOFF_PREFIX = "[handoff"

_SYNTHETIC_PREFIXES = (CONTEXT_PREFIX, MEMORY_PREFIX, HANDOFF_PREFIX)


def _match_context(request: ModelRequest) -> tuple[str, str, dict]:
    """Extract the match text and the shared-context map.

    The runtime passes shared context as a synthetic system message
    "[context] {json}"; synthetic messages never participate in matching.
    """
    context: dict = {}
    match_text = ""
    last_content = ""
    for message in request.messages:
        content = getattr(message, "content", "")
        if content.startswith(CONTEXT_PREFIX):
            try:
                context = json.loads(content[len(CONTEXT_PREFIX):])
            except json.JSONDecodeError:
                pass
    for message in reversed(request.messages):
        content = getattr(message, "content", "")
        if any(content.startswith(p) for p in _SYNTHETIC_PREFIXES):
            continue
        role = getattr(message, "role", "user")
        match_text = f"[{role}] {content}"
        last_content = content
        break
    return match_text, last_content, context


def _match_rule(rule: Rule, text: str) -> dict | None:
    if rule.regex is not None:
        m = rule.regex.match(text)
        return {k: v for k, v in m.groupdict().items()} if m else None
    return {} if rule.pattern.lower() in text.lower() else None


def _build_action(rule: Rule, captures: dict, context: dict) -> ModelAction:
    if rule.action_kind == "final":
        return ModelAction(final_text=_substitute(str(rule.payload), captures, context))
    if rule.action_kind == "handoff":
        payload = {k: _substitute(v, captures, context) if isinstance(v, str) else v
                   for k, v in rule.payload.items()}
        return ModelAction(handoff=payload)
    calls = []
    for i, spec in enumerate(rule.payload, start=1):
        calls.append(ToolCall(
            id=f"c{i}",
            tool_name=str(spec.get("tool", "")),
            arguments=_substitute_tree(spec.get("arguments", {}), captures, context),
        ))
    return ModelAction(tool_calls=calls)


_SUBST = re.compile(r"\{(ctx\.)?([A-Za-z_][A-Za-z0-9_]*)\}")


def _substitute(template: str, captures: dict, context: dict) -> str:
    def repl(match: re.Match) -> str:
        is_ctx, name = match.group(1), match.group(2)
        if is_ctx:
            return str(context.get(name, match.group(0)))
        if name in captures:
            return str(captures[name])
        return match.group(0)  # unknown placeholder stays literal (visible in tests)

    return _SUBST.sub(repl, template)


def _substitute_tree(value, captures: dict, context: dict):
    if isinstance(value, str):
        return _substitute(value, captures, context)
    if isinstance(value, list):
        return [_substitute_tree(v, captures, context) for v in value]
    if isinstance(value, dict):
        return {k: _substitute_tree(v, captures, context) for k, v in value.items()}
    return value


class RemoteModel(ModelAdapter):
    """Minimal HTTP adapter: POST {base}/v1/chat with {model, messages, tools},
    expects {"action": {...}} back. Used only when TIPPY_MODEL_MODE=remote."""

    def __init__(self, base_url: str, api_key: str = "", model: str = "default", timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout_s = timeout_s

    def complete(self, request: ModelRequest) -> ModelAction:
        body = json.dumps({
            "model": self.model,
            "messages": [
                {"role": getattr(m, "role", "user"), "content": getattr(m, "content", "")}
                for m in request.messages
            ],
            "tools": [d.to_dict() for d in request.available_tools],
        }).encode("utf-8")
        req = urllib.request.Request(
            self.base_url + "/v1/chat", data=body,
            headers={"Content-Type": "application/json",
                     **({"Authorization": f"Bearer {self.api_key}"} if self.api_key else {})},
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except Exception as exc:
            raise AdapterError(f"remote model transport failure: {exc}") from exc
        return enforce_scoping(parse_action(payload.get("action")), request)


def parse_action(raw) -> ModelAction:
    if not isinstance(raw, dict):
        raise AdapterError("remote action must be an object")
    if "final_text" in raw:
        return ModelAction(final_text=str(raw["final_text"]))
    if "handoff" in raw:
        return ModelAction(handoff=dict(raw["handoff"]))
    if "tool_calls" in raw:
        calls = [ToolCall(id=str(c.get("id", f"c{i}")), tool_name=str(c.get("tool_name", "")),
                          arguments=dict(c.get("arguments", {})))
                 for i, c in enumerate(raw["tool_calls"], start=1)]
        return ModelAction(tool_calls=calls)
    raise AdapterError("remote action has no recognized variant")
