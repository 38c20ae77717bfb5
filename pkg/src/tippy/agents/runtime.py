"""The supervisor-pattern turn loop.

Pipeline per turn: guard the input (blocked inputs never reach a model), then
alternate model actions and tool executions until the supervisor produces a
guarded final reply. Specialists return control to the supervisor when they
finish; tool calls execute on their owning MCP server; calls that require
human approval suspend the turn into a PendingTurn that the gateway resumes.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..errors import AdapterError, RoutingError, TippyError
from ..mcp.client import McpClient
from ..mcp.server import CallContext
from ..model import CONTEXT_PREFIX, MEMORY_PREFIX, ModelAdapter, ModelRequest, ToolCall
from .context import truncate_context
from .guardrails import Guardrails
from .profiles import AgentProfile
from .state import ConversationState, Message

MEMORY_INJECT_THRESHOLD = 0.25
MEMORY_INJECT_TOP_K = 3


@dataclass
class TurnLimits:
    max_steps: int = 16
    max_handoff_depth: int = 4
    budget_tokens: int = 8000


@dataclass
class TurnResult:
    status: str  # ok | blocked | pending_approval | error
    reply_text: str
    turn_id: str
    pending: "PendingTurn | None" = None


@dataclass
class _Batch:
    calls: list[ToolCall]
    index: int = 0
    step: int = 0  # model-action ordinal, used for unique call ids


@dataclass
class _TurnWork:
    conversation: ConversationState
    messages: list[Message]
    shared: dict
    active: str
    user_id: str
    turn_id: str
    limits: TurnLimits
    turn_span: object
    steps: int = 0
    handoffs: int = 0
    batch: _Batch | None = None


@dataclass
class PendingTurn:
    """A turn suspended on a tool call that needs human approval."""
    work: _TurnWork
    tool_name: str
    arguments: dict

    @property
    def conversation_id(self) -> str:
        return self.work.conversation.conversation_id


class AgentRuntime:
    def __init__(self, profiles: dict[str, AgentProfile], adapter: ModelAdapter,
                 client: McpClient, guardrails: Guardrails, tracer,
                 approval_check=None, memory=None):
        self.profiles = profiles
        self.adapter = adapter
        self.client = client
        self.guardrails = guardrails
        self.tracer = tracer
        self.approval_check = approval_check or (lambda tool, args: False)
        self.memory = memory
        self._turn_counter = 0

    # --- public operations ---

    def new_conversation(self, conversation_id: str) -> ConversationState:
        state = ConversationState(
            conversation_id=conversation_id,
            messages=[Message(role="system", content=self.profiles["supervisor"].instructions)],
        )
        state.check()
        return state

    def run_turn(self, state: ConversationState, user_message: str,
                 limits: TurnLimits | None = None, user_id: str = "u1") -> TurnResult:
        limits = limits or TurnLimits()
        self._turn_counter += 1
        turn_id = f"t{self._turn_counter:04d}"
        turn_span = self.tracer.begin_span(state.conversation_id, "turn", turn_id,
                                           agent=state.active_agent)

        guard_span = self.tracer.begin_span(state.conversation_id, "guardrail", "guard_input",
                                            parent=turn_span)
        verdict = self.guardrails.guard_input(user_message)
        self.tracer.end_span(guard_span, decision=verdict.decision,
                             category=verdict.category, matched_rule=verdict.matched_rule)
        if verdict.blocked:
            reply = (f"I can't help with that: the request was blocked by the "
                     f"{verdict.category} guardrail.")
            state.messages.append(Message(role="user", content=user_message))
            state.messages.append(Message(role="assistant", agent="supervisor", content=reply))
            self.tracer.end_span(turn_span, status="ok", outcome="blocked",
                                 category=verdict.category)
            return TurnResult(status="blocked", reply_text=reply, turn_id=turn_id)

        work = _TurnWork(
            conversation=state,
            messages=list(state.messages) + [Message(role="user", content=user_message)],
            shared=dict(state.shared_context),
            active="supervisor",
            user_id=user_id,
            turn_id=turn_id,
            limits=limits,
            turn_span=turn_span,
        )
        return self._run_loop(work)

    def resume_turn(self, pending: PendingTurn, decision: str) -> TurnResult:
        """Continue a suspended turn after approval resolution.

        decision "approve" executes the suspended call and keeps going;
        "deny" (and expiry) completes the turn with a refusal citing denial.
        """
        work = pending.work
        if decision != "approve":
            reply = (f"The operator denied approval for {pending.tool_name}; "
                     f"the request was not executed.")
            work.messages.append(Message(role="assistant", agent="supervisor", content=reply))
            return self._finish(work, reply, status="ok")
        return self._run_loop(work)

    def perform_handoff(self, state: ConversationState, target: str, reason: str) -> ConversationState:
        """Transfer control; shared context is preserved intact."""
        profile = self.profiles[state.active_agent]
        if target not in profile.handoff_targets:
            raise RoutingError(
                f"agent {state.active_agent!r} cannot hand off to {target!r} "
                f"(specialist-to-specialist handoffs are forbidden)"
            )
        state.messages.append(Message(
            role="assistant", agent=state.active_agent,
            content=f"[handoff to {target}] {reason}",
        ))
        state.active_agent = target
        return state

    # --- the loop ---

    def _run_loop(self, work: _TurnWork) -> TurnResult:
        while True:
            if work.batch is not None:
                outcome = self._execute_batch(work)
                if outcome is not None:
                    return outcome
                continue
            if work.steps >= work.limits.max_steps:
                reply = "step budget exhausted"
                work.messages.append(Message(role="assistant", agent="supervisor", content=reply))
                return self._finish(work, reply, status="error")

            work.steps += 1
            request = self._build_request(work)
            span = self.tracer.begin_span(work.conversation.conversation_id, "model_call",
                                          f"{work.active}/{work.turn_id}.{work.steps}",
                                          parent=work.turn_span, agent=work.active)
            try:
                action = self.adapter.complete(request)
            except AdapterError as exc:
                self.tracer.end_span(span, status="error", error=str(exc))
                self.tracer.end_span(work.turn_span, status="error", error=str(exc))
                return TurnResult(status="error", reply_text=f"turn failed: {exc}",
                                  turn_id=work.turn_id)
            kind = "final" if action.final_text is not None else (
                "tool_calls" if action.tool_calls is not None else "handoff")
            self.tracer.end_span(span, action=kind)

            if action.tool_calls is not None:
                profile = self.profiles[work.active]
                for call in action.tool_calls:
                    if call.tool_name not in profile.tool_names:
                        message = (f"scoping error: tool {call.tool_name!r} is outside "
                                   f"agent {work.active!r}'s toolset")
                        self.tracer.end_span(work.turn_span, status="error", error=message)
                        return TurnResult(status="error", reply_text=message, turn_id=work.turn_id)
                work.batch = _Batch(calls=list(action.tool_calls), step=work.steps)
                continue

            if action.handoff is not None:
                work.handoffs += 1
                if work.handoffs > work.limits.max_handoff_depth:
                    reply = "handoff budget exhausted"
                    work.messages.append(Message(role="assistant", agent="supervisor", content=reply))
                    return self._finish(work, reply, status="error")
                target = action.handoff.get("target", "")
                reason = action.handoff.get("reason", "")
                profile = self.profiles[work.active]
                if target not in profile.handoff_targets:
                    message = f"routing error: {work.active} -> {target} is not a legal handoff"
                    self.tracer.end_span(work.turn_span, status="error", error=message)
                    return TurnResult(status="error", reply_text=message, turn_id=work.turn_id)
                span = self.tracer.begin_span(work.conversation.conversation_id, "handoff",
                                              f"{work.active}->{target}", parent=work.turn_span,
                                              reason=reason)
                work.messages.append(Message(role="assistant", agent=work.active,
                                             content=f"[handoff to {target}] {reason}"))
                work.active = target
                self.tracer.end_span(span)
                continue

            # final text
            if work.active != "supervisor":
                work.messages.append(Message(role="assistant", agent=work.active,
                                             content=action.final_text))
                work.active = "supervisor"
                continue
            reply = action.final_text
            guard_span = self.tracer.begin_span(work.conversation.conversation_id, "guardrail",
                                                "guard_output", parent=work.turn_span)
            verdict = self.guardrails.guard_output(reply)
            self.tracer.end_span(guard_span, decision=verdict.decision, category=verdict.category)
            if verdict.blocked:
                reply = (f"I generated a response but withheld it: it was blocked by the "
                         f"{verdict.category} guardrail.")
            work.messages.append(Message(role="assistant", agent="supervisor", content=reply))
            return self._finish(work, reply, status="ok")

    def _execute_batch(self, work: _TurnWork) -> TurnResult | None:
        """Run the pending tool batch; returns None when the batch completes,
        a pending_approval TurnResult when it suspends."""
        batch = work.batch
        remaining = batch.calls[batch.index:]
        needs_any_approval = any(
            self.approval_check(c.tool_name, c.arguments) for c in remaining
        )
        if not needs_any_approval and len(remaining) > 1:
            # independent calls fan out; results are appended in call order
            with ThreadPoolExecutor(max_workers=min(8, len(remaining))) as pool:
                outcomes = list(pool.map(lambda c: self._call_tool_guarded(work, c), remaining))
            for call, (text, is_error) in zip(remaining, outcomes):
                self._append_call_messages(work, batch, call, text, is_error)
            work.batch = None
            return None
        while batch.index < len(batch.calls):
            call = batch.calls[batch.index]
            if self.approval_check(call.tool_name, call.arguments):
                return TurnResult(
                    status="pending_approval",
                    reply_text=f"awaiting approval for {call.tool_name}",
                    turn_id=work.turn_id,
                    pending=PendingTurn(work=work, tool_name=call.tool_name,
                                        arguments=call.arguments),
                )
            text, is_error = self._call_tool_guarded(work, call)
            self._append_call_messages(work, batch, call, text, is_error)
            batch.index += 1
        work.batch = None
        return None

    def _call_tool_guarded(self, work: _TurnWork, call: ToolCall) -> tuple[str, bool]:
        span = self.tracer.begin_span(work.conversation.conversation_id, "tool_call",
                                      call.tool_name, parent=work.turn_span,
                                      agent=work.active, tool=call.tool_name)
        ctx = CallContext(user_id=work.user_id,
                          conversation_id=work.conversation.conversation_id,
                          trace_parent=span.span_id)
        try:
            outcome = self.client.call_tool(call.tool_name, call.arguments, ctx)
            text, is_error = outcome.text, outcome.is_error
        except TippyError as exc:
            text, is_error = str(exc), True
        self.tracer.end_span(span, status="error" if is_error else "ok")
        return text, is_error

    def _append_call_messages(self, work: _TurnWork, batch: _Batch, call: ToolCall,
                              text: str, is_error: bool) -> None:
        call_id = f"{work.turn_id}.{batch.step}.{call.id}"
        work.messages.append(Message(
            role="assistant", agent=work.active,
            content=f"[tool_call {call.tool_name}] {json.dumps(call.arguments, sort_keys=True)}",
            tool_call_id=call_id,
        ))
        work.messages.append(Message(role="tool", content=text, tool_call_id=call_id))
        if not is_error:
            self._update_shared_context(work, text)

    def _update_shared_context(self, work: _TurnWork, text: str) -> None:
        # documented plumbing: tool results feed the shared-context keys the
        # scripted rules rely on
        try:
            payload = json.loads(text)
        except (json.JSONDecodeError, ValueError):
            return
        if not isinstance(payload, dict):
            return
        if isinstance(payload.get("smiles"), str):
            work.shared["focus_smiles"] = payload["smiles"]
        if isinstance(payload.get("job_id"), str):
            work.shared["active_job_id"] = payload["job_id"]

    def _build_request(self, work: _TurnWork) -> ModelRequest:
        profile = self.profiles[work.active]
        # the request swaps in the active agent's instructions for the head
        # system message; the conversation keeps its own
        body = work.messages[1:] if work.messages and work.messages[0].role == "system" else list(work.messages)
        base = [Message(role="system", content=profile.instructions)] + body
        truncated = truncate_context(base, work.limits.budget_tokens)
        injected = list(truncated)
        if work.active == "supervisor" and self.memory is not None and len(self.memory):
            query = next((m.content for m in reversed(work.messages) if m.role == "user"), "")
            hits = [h for h in self.memory.search(query, MEMORY_INJECT_TOP_K)
                    if h["score"] >= MEMORY_INJECT_THRESHOLD]
            if hits:
                lines = "; ".join(f"{h['id']}: {h['text']}" for h in hits)
                injected.append(Message(role="system", content=f"{MEMORY_PREFIX}{lines}"))
        injected.append(Message(
            role="system",
            content=f"{CONTEXT_PREFIX}{json.dumps(work.shared, sort_keys=True)}",
        ))
        descriptors = [self.client.descriptor(name) for name in profile.tool_names]
        return ModelRequest(
            agent=work.active,
            messages=injected,
            available_tools=[d for d in descriptors if d is not None],
            available_handoffs=list(profile.handoff_targets),
        )

    def _finish(self, work: _TurnWork, reply: str, status: str) -> TurnResult:
        work.conversation.messages = work.messages
        work.conversation.shared_context = work.shared
        work.conversation.active_agent = "supervisor"
        self.tracer.end_span(work.turn_span,
                             status="ok" if status == "ok" else "error",
                             outcome=status)
        if status == "ok" and self.memory is not None:
            self.memory.add(reply, {"conversation_id": work.conversation.conversation_id,
                                    "kind": "final_reply"})
        return TurnResult(status=status, reply_text=reply, turn_id=work.turn_id)
