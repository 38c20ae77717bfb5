"""Composition root: wires the world, engine, MCP servers, agent runtime,
approvals, memory, tracing, and lineage into one application object.

The gateway serves this over HTTP; tests drive it directly.
"""

from __future__ import annotations

import json
import os
import queue
import threading
from dataclasses import dataclass
from pathlib import Path

from . import rosters
from .agents import AgentRuntime, Guardrails, load_profiles
from .agents.runtime import PendingTurn, TurnResult
from .engine import CONSTANTS, JobEngine
from .errors import ConflictError, ConversationBusyError, NotFoundError, PermissionDeniedError
from .lineage import ConfigLineage, collect_config_payload
from .mcp.client import McpClient
from .memory import MemoryStore
from .model import ModelAdapter, RemoteModel, ScriptedModel
from .molkit.server import build_molecule_server
from .tools import build_lab_server, call_needs_approval
from .tracing import Tracer
from .util import atomic_write_text, canonical_json
from .world import World, load_world, persist_world

APPROVAL_EXPIRY_S = 300.0
DEFAULT_CONFIG_DIR = Path(__file__).parent / "config"
CONFIG_DIR_ENV = "TIPPY_CONFIG_DIR"
SEED_ENV = "TIPPY_SEED"


@dataclass
class ApprovalRequest:
    id: str
    conversation_id: str
    tool_name: str
    arguments: dict
    requested_at: float
    state: str = "pending"  # pending | approved | denied | expired
    resolver_user_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "approval_id": self.id, "conversation_id": self.conversation_id,
            "tool_name": self.tool_name, "arguments": self.arguments,
            "requested_at": self.requested_at, "state": self.state,
            "resolver_user_id": self.resolver_user_id,
        }


class TippyApp:
    def __init__(self, data_dir: Path | str | None = None,
                 config_dir: Path | str | None = None,
                 seed: int | None = None,
                 adapter: ModelAdapter | None = None):
        self.data_dir = Path(data_dir if data_dir is not None
                             else os.environ.get("TIPPY_DATA_DIR", "./data"))
        self.config_dir = Path(config_dir if config_dir is not None
                               else os.environ.get(CONFIG_DIR_ENV, DEFAULT_CONFIG_DIR))
        if seed is None:
            seed = int(os.environ.get(SEED_ENV, "0"))

        self.world: World = load_world(self.data_dir / "world.snapshot")
        self.engine = JobEngine(self.world, seed=seed, events_path=self.data_dir / "events.jsonl")
        self.tracer = Tracer(self.engine.clock, self.data_dir / "traces.jsonl")
        self.lineage = ConfigLineage(self.engine.clock, self.data_dir / "config_lineage.jsonl")
        self.memory = MemoryStore(self.data_dir / "memory.jsonl")

        self.lab_server = build_lab_server(self.world, self.engine)
        self.molecule_server = build_molecule_server()
        self.client = McpClient()
        self.client.attach(self.lab_server)
        self.client.attach(self.molecule_server)

        self.profiles = load_profiles(self.config_dir)
        self.guardrails = Guardrails(self.config_dir / "guardrails",
                                     entity_terms_provider=self._entity_terms)
        self.adapter = adapter if adapter is not None else self._build_adapter()
        self.runtime = AgentRuntime(
            profiles=self.profiles, adapter=self.adapter, client=self.client,
            guardrails=self.guardrails, tracer=self.tracer,
            approval_check=lambda tool, args: call_needs_approval(self.world, self.engine, tool, args),
            memory=self.memory,
        )

        self.conversations: dict = {}
        self._conversation_locks: dict[str, threading.Lock] = {}
        self.approvals: dict[str, ApprovalRequest] = {}
        self._pending_turns: dict[str, PendingTurn] = {}
        self._approval_counter = 0
        self._subscribers: list[queue.Queue] = []
        self._lock = threading.Lock()

        self.engine.add_listener(self._on_engine_event)
        self._load_conversations()
        self.snapshot_config()  # genesis lineage entry

    # --- wiring helpers ---

    def _build_adapter(self) -> ModelAdapter:
        mode = os.environ.get("TIPPY_MODEL_MODE", "scripted")
        if mode == "remote":
            base = os.environ.get("TIPPY_MODEL_BASE_URL", "")
            key = os.environ.get("TIPPY_MODEL_API_KEY", "")
            return RemoteModel(base_url=base, api_key=key)
        return ScriptedModel.from_file(self.config_dir / "scripted_rules.tsv")

    def _entity_terms(self):
        for store in (self.world.labs, self.world.actors, self.world.workflows, self.world.jobs):
            for entity_id, entity in list(store.items()):
                yield entity_id
                name = getattr(entity, "name", None)
                if name:
                    yield name
        yield from list(self.conversations)

    def _on_engine_event(self, event) -> None:
        if event.state == "Completed":
            job = self.world.jobs.get(event.job_id)
            if job is not None and job.result is not None:
                self.memory.add(
                    f"job {job.id} ({job.workflow_id}) completed: {job.result.summary}",
                    {"job_id": job.id, "kind": "job_summary"},
                )
        self._broadcast("job_state", {"at_s": event.at_s, "job_id": event.job_id,
                                      "state": event.state})

    def snapshot_config(self):
        payload = collect_config_payload(self.config_dir, extras={
            "toolsets": {k: list(v) for k, v in rosters.AGENT_TOOLSETS.items()},
            "engine_constants": CONSTANTS,
        })
        return self.lineage.snapshot(payload)

    # --- event stream ---

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def _broadcast(self, kind: str, data: dict) -> None:
        with self._lock:
            subscribers = list(self._subscribers)
        for q in subscribers:
            q.put({"event": kind, "data": data})

    # --- operations ---

    def _conversation_lock(self, conversation_id: str) -> threading.Lock:
        with self._lock:
            return self._conversation_locks.setdefault(conversation_id, threading.Lock())

    def chat(self, conversation_id: str, user_id: str, text: str) -> dict:
        lock = self._conversation_lock(conversation_id)
        if not lock.acquire(blocking=False):
            raise ConversationBusyError(f"a turn is already running for {conversation_id!r}")
        try:
            with self._lock:
                state = self.conversations.get(conversation_id)
                if state is None:
                    state = self.runtime.new_conversation(conversation_id)
                    self.conversations[conversation_id] = state
            result = self.runtime.run_turn(state, text, user_id=user_id)
            return self._turn_outcome(result, user_id)
        finally:
            lock.release()
            self._persist_conversations()

    def _turn_outcome(self, result: TurnResult, user_id: str) -> dict:
        if result.status == "pending_approval":
            approval = self._register_approval(result.pending)
            self._broadcast("approval", {"approval_id": approval.id, "state": "pending",
                                         "conversation_id": approval.conversation_id})
            return {"status": "pending_approval", "approval_id": approval.id,
                    "turn_id": result.turn_id}
        self._broadcast("turn", {"turn_id": result.turn_id, "status": result.status})
        return {"status": result.status, "reply_text": result.reply_text,
                "turn_id": result.turn_id}

    def _register_approval(self, pending: PendingTurn) -> ApprovalRequest:
        with self._lock:
            self._approval_counter += 1
            approval = ApprovalRequest(
                id=f"apr-{self._approval_counter:04d}",
                conversation_id=pending.conversation_id,
                tool_name=pending.tool_name,
                arguments=pending.arguments,
                requested_at=self.engine.clock.now_s,
            )
            self.approvals[approval.id] = approval
            self._pending_turns[approval.id] = pending
            return approval

    def resolve_approval(self, approval_id: str, decision: str, user_id: str) -> dict:
        if decision not in ("approve", "deny"):
            raise ConflictError(f"unknown decision {decision!r}")
        user = self.world.get("user", user_id)
        if user.role not in ("scientist", "admin"):
            raise PermissionDeniedError(f"user {user_id!r} may not resolve approvals")
        approval = self.approvals.get(approval_id)
        if approval is None:
            raise NotFoundError(f"approval {approval_id!r} not found")
        if approval.state != "pending":
            raise ConflictError(f"approval {approval_id} already {approval.state}")
        pending = self._pending_turns.pop(approval_id)
        approval.state = "approved" if decision == "approve" else "denied"
        approval.resolver_user_id = user_id
        self._broadcast("approval", {"approval_id": approval.id, "state": approval.state,
                                     "conversation_id": approval.conversation_id})
        if decision == "approve" and approval.tool_name == "start_job":
            job_id = approval.arguments.get("job_id")
            if job_id:
                self.engine.grant_approval(job_id)
        lock = self._conversation_lock(approval.conversation_id)
        with lock:
            result = self.runtime.resume_turn(pending, decision)
        outcome = self._turn_outcome(result, user_id)
        self._persist_conversations()
        return {"approval": approval.to_dict(), "turn": outcome}

    def expire_approvals(self) -> list[str]:
        now = self.engine.clock.now_s
        expired = []
        for approval in list(self.approvals.values()):
            if approval.state == "pending" and now - approval.requested_at >= APPROVAL_EXPIRY_S:
                pending = self._pending_turns.pop(approval.id, None)
                approval.state = "expired"
                expired.append(approval.id)
                self._broadcast("approval", {"approval_id": approval.id, "state": "expired",
                                             "conversation_id": approval.conversation_id})
                if pending is not None:
                    lock = self._conversation_lock(approval.conversation_id)
                    with lock:
                        result = self.runtime.resume_turn(pending, "deny")
                    self._turn_outcome(result, "system")
        return expired

    def tick(self, dt_s: float) -> list:
        events = self.engine.tick(dt_s)
        self.expire_approvals()
        self.persist()
        return events

    # --- queries used by the gateway ---

    def pending_approvals(self, state: str | None = "pending") -> list[dict]:
        out = [a.to_dict() for a in self.approvals.values()
               if state is None or a.state == state]
        out.sort(key=lambda a: a["approval_id"])
        return out

    def traces(self, conversation_id: str) -> list[dict]:
        return self.tracer.tree_for(conversation_id)

    # --- persistence ---

    def persist(self) -> None:
        persist_world(self.world, self.data_dir / "world.snapshot")
        self._persist_conversations()

    def _persist_conversations(self) -> None:
        # one writer at a time: the temp-then-rename path is shared
        with self._lock:
            payload = {cid: state.to_dict() for cid, state in self.conversations.items()}
            atomic_write_text(self.data_dir / "conversations.snapshot", canonical_json(payload))

    def _load_conversations(self) -> None:
        path = self.data_dir / "conversations.snapshot"
        if not path.exists():
            return
        from .agents.state import ConversationState
        payload = json.loads(path.read_text(encoding="utf-8"))
        for cid, raw in payload.items():
            self.conversations[cid] = ConversationState.from_dict(raw)


def build_app(data_dir=None, config_dir=None, seed=None, adapter=None) -> TippyApp:
    return TippyApp(data_dir=data_dir, config_dir=config_dir, seed=seed, adapter=adapter)
