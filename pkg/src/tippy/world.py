"""Domain entities for the simulated lab backend plus file-backed persistence.

The whole entity graph lives in one canonical JSON snapshot (sorted keys,
stable layout) so equal worlds always serialize to byte-identical files.
"""

from __future__ import annotations

import base64
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from . import rosters
from .errors import LoadError, NotFoundError, PersistenceError, ValidationError
from .schema import ParameterSchema, ParamSpec
from .util import atomic_write_text, canonical_json, data_dir

SNAPSHOT_FILENAME = "world.snapshot"

LAB_STATUSES = ("online", "offline")
ACTOR_KINDS = ("instrument", "human")
ACTOR_STATUSES = ("idle", "busy", "offline")
JOB_STATES = ("Created", "Queued", "Running", "Completed", "Failed", "Cancelled")
RESULT_KINDS = ("hplc", "synthesis", "generic")
USER_ROLES = ("scientist", "admin")


@dataclass
class Lab:
    id: str
    name: str
    site: str
    status: str = "online"
    actor_ids: list[str] = field(default_factory=list)
    workflow_ids: list[str] = field(default_factory=list)

    def check(self) -> None:
        _require(bool(self.id), "id", "empty id")
        _require(self.status in LAB_STATUSES, "status", f"unknown status {self.status!r}")


@dataclass
class Actor:
    id: str
    name: str
    kind: str
    capabilities: list[str]
    status: str
    lab_id: str

    def check(self) -> None:
        _require(bool(self.id), "id", "empty id")
        _require(self.kind in ACTOR_KINDS, "kind", f"unknown kind {self.kind!r}")
        _require(self.status in ACTOR_STATUSES, "status", f"unknown status {self.status!r}")


@dataclass
class Workflow:
    id: str
    name: str
    lab_id: str
    parameter_schema: ParameterSchema
    nominal_duration_s: float
    flags: set[str] = field(default_factory=set)
    result_kind: str = "generic"

    def check(self) -> None:
        _require(bool(self.id), "id", "empty id")
        _require(self.nominal_duration_s > 0, "nominal_duration_s", "must be > 0")
        _require(self.result_kind in RESULT_KINDS, "result_kind", f"unknown kind {self.result_kind!r}")
        self.parameter_schema.check()

    @property
    def high_stakes(self) -> bool:
        return "high_stakes" in self.flags


@dataclass
class JobResult:
    kind: str
    values: dict
    summary: str

    def check(self) -> None:
        _require(self.kind in RESULT_KINDS, "kind", f"unknown kind {self.kind!r}")
        if self.kind == "hplc":
            rt = self.values.get("retention_time_min")
            _require(
                isinstance(rt, (int, float)) and 0.2 <= rt <= 30.0,
                "retention_time_min",
                "must be within [0.2, 30.0]",
            )


@dataclass
class Job:
    id: str
    workflow_id: str
    lab_id: str
    creator_user_id: str
    parameters: dict
    state: str = "Created"
    created_at: float = 0.0
    started_at: float | None = None
    ended_at: float | None = None
    assigned_actor_ids: list[str] = field(default_factory=list)
    result: JobResult | None = None
    attachment_ids: list[str] = field(default_factory=list)

    def check(self) -> None:
        _require(bool(self.id), "id", "empty id")
        _require(self.state in JOB_STATES, "state", f"unknown state {self.state!r}")
        started_expected = self.state in ("Running", "Completed", "Failed")
        _require(
            (self.started_at is not None) == started_expected,
            "started_at",
            f"must be {'present' if started_expected else 'absent'} in state {self.state}",
        )
        ended_expected = self.state in ("Completed", "Failed", "Cancelled")
        _require(
            (self.ended_at is not None) == ended_expected,
            "ended_at",
            f"must be {'present' if ended_expected else 'absent'} in state {self.state}",
        )
        if self.started_at is not None and self.ended_at is not None:
            _require(self.ended_at >= self.started_at, "ended_at", "must be >= started_at")
        if self.result is not None:
            self.result.check()


@dataclass
class User:
    id: str
    name: str
    role: str
    permissions: set[str] = field(default_factory=set)

    def check(self) -> None:
        _require(bool(self.id), "id", "empty id")
        _require(self.role in USER_ROLES, "role", f"unknown role {self.role!r}")
        unknown = sorted(self.permissions - set(rosters.ALL_TOOL_NAMES))
        _require(not unknown, "permissions", f"unknown tool names {unknown}")


@dataclass
class Document:
    id: str
    title: str
    mime: str
    data: bytes
    linked_job_id: str | None = None

    def check(self) -> None:
        _require(bool(self.id), "id", "empty id")
        _require(len(self.data) > 0, "data", "bytes must be non-empty")


ENTITY_KINDS = {
    "lab": Lab,
    "actor": Actor,
    "workflow": Workflow,
    "job": Job,
    "user": User,
    "document": Document,
}


class World:
    """The complete entity graph. Reads are lock-free snapshots of immutable
    dataclasses; mutation goes through upsert under a single writer lock."""

    def __init__(self):
        self.labs: dict[str, Lab] = {}
        self.actors: dict[str, Actor] = {}
        self.workflows: dict[str, Workflow] = {}
        self.jobs: dict[str, Job] = {}
        self.users: dict[str, User] = {}
        self.documents: dict[str, Document] = {}
        self._write_lock = threading.RLock()

    def _store_for(self, entity) -> dict:
        for kind, cls in ENTITY_KINDS.items():
            if isinstance(entity, cls):
                return getattr(self, _PLURAL[kind])
        raise ValidationError(f"unknown entity type {type(entity).__name__}")

    def upsert(self, entity) -> None:
        with self._write_lock:
            entity.check()
            self._check_references(entity)
            self._store_for(entity)[entity.id] = entity

    def get(self, kind: str, entity_id: str):
        store = getattr(self, _PLURAL.get(kind, ""), None)
        if store is None:
            raise ValidationError(f"unknown entity kind {kind!r}")
        try:
            return store[entity_id]
        except KeyError:
            raise NotFoundError(f"{kind} {entity_id!r} not found") from None

    def _check_references(self, entity) -> None:
        if isinstance(entity, Actor):
            _require(entity.lab_id in self.labs, "lab_id", f"unresolved lab_id {entity.lab_id!r}")
        elif isinstance(entity, Workflow):
            _require(entity.lab_id in self.labs, "lab_id", f"unresolved lab_id {entity.lab_id!r}")
        elif isinstance(entity, Lab):
            for aid in entity.actor_ids:
                _require(aid in self.actors, "actor_ids", f"unresolved actor_id {aid!r}")
            for wid in entity.workflow_ids:
                _require(wid in self.workflows, "workflow_ids", f"unresolved workflow_id {wid!r}")
        elif isinstance(entity, Job):
            _require(
                entity.workflow_id in self.workflows,
                "workflow_id",
                f"unresolved workflow_id {entity.workflow_id!r}",
            )
            _require(entity.lab_id in self.labs, "lab_id", f"unresolved lab_id {entity.lab_id!r}")
            _require(
                entity.creator_user_id in self.users,
                "creator_user_id",
                f"unresolved creator_user_id {entity.creator_user_id!r}",
            )
            for aid in entity.assigned_actor_ids:
                _require(aid in self.actors, "assigned_actor_ids", f"unresolved actor_id {aid!r}")
            workflow = self.workflows[entity.workflow_id]
            problems = workflow.parameter_schema.validate(entity.parameters)
            _require(not problems, "parameters", "; ".join(problems))
        elif isinstance(entity, Document):
            if entity.linked_job_id is not None:
                _require(
                    entity.linked_job_id in self.jobs,
                    "linked_job_id",
                    f"unresolved linked_job_id {entity.linked_job_id!r}",
                )

    def validate(self) -> None:
        """Full-graph validation in a fixed order so the first violated
        invariant is deterministic."""
        for store_name in ("labs", "actors", "workflows", "jobs", "users", "documents"):
            store = getattr(self, store_name)
            for entity_id in sorted(store):
                entity = store[entity_id]
                entity.check()
                self._check_references(entity)
        # busy <=> listed by exactly one Running job
        running_assignments: dict[str, int] = {}
        for job in self.jobs.values():
            if job.state == "Running":
                for aid in job.assigned_actor_ids:
                    running_assignments[aid] = running_assignments.get(aid, 0) + 1
        for actor_id in sorted(self.actors):
            actor = self.actors[actor_id]
            count = running_assignments.get(actor_id, 0)
            if actor.status == "busy":
                _require(count == 1, "status", f"actor {actor_id!r} busy without exactly one Running job")
            else:
                _require(count == 0, "status", f"actor {actor_id!r} not busy but assigned to a Running job")

    # --- serialization ---

    def to_payload(self) -> dict:
        return {
            "labs": {i: _lab_dict(x) for i, x in self.labs.items()},
            "actors": {i: _actor_dict(x) for i, x in self.actors.items()},
            "workflows": {i: _workflow_dict(x) for i, x in self.workflows.items()},
            "jobs": {i: _job_dict(x) for i, x in self.jobs.items()},
            "users": {i: _user_dict(x) for i, x in self.users.items()},
            "documents": {i: _document_dict(x) for i, x in self.documents.items()},
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "World":
        world = cls()
        try:
            for i, raw in payload.get("labs", {}).items():
                world.labs[i] = _lab_from(raw)
            for i, raw in payload.get("actors", {}).items():
                world.actors[i] = _actor_from(raw)
            for i, raw in payload.get("workflows", {}).items():
                world.workflows[i] = _workflow_from(raw)
            for i, raw in payload.get("jobs", {}).items():
                world.jobs[i] = _job_from(raw)
            for i, raw in payload.get("users", {}).items():
                world.users[i] = _user_from(raw)
            for i, raw in payload.get("documents", {}).items():
                world.documents[i] = _document_from(raw)
        except (KeyError, TypeError, AttributeError) as exc:
            raise LoadError(f"malformed snapshot: {exc}") from exc
        try:
            world.validate()
        except ValidationError as exc:
            raise LoadError(f"snapshot violates invariant: {exc}") from exc
        return world

    def equals(self, other: "World") -> bool:
        return self.to_payload() == other.to_payload()


_PLURAL = {
    "lab": "labs",
    "actor": "actors",
    "workflow": "workflows",
    "job": "jobs",
    "user": "users",
    "document": "documents",
}


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise ValidationError(f"{field_name}: {message}", [field_name])


# --- entity <-> dict converters (canonical field order comes from sort_keys) ---

def _lab_dict(x: Lab) -> dict:
    return {
        "id": x.id, "name": x.name, "site": x.site, "status": x.status,
        "actor_ids": list(x.actor_ids), "workflow_ids": list(x.workflow_ids),
    }


def _lab_from(raw: dict) -> Lab:
    return Lab(
        id=raw["id"], name=raw["name"], site=raw["site"], status=raw["status"],
        actor_ids=list(raw.get("actor_ids", [])), workflow_ids=list(raw.get("workflow_ids", [])),
    )


def _actor_dict(x: Actor) -> dict:
    return {
        "id": x.id, "name": x.name, "kind": x.kind, "capabilities": list(x.capabilities),
        "status": x.status, "lab_id": x.lab_id,
    }


def _actor_from(raw: dict) -> Actor:
    return Actor(
        id=raw["id"], name=raw["name"], kind=raw["kind"],
        capabilities=list(raw.get("capabilities", [])), status=raw["status"], lab_id=raw["lab_id"],
    )


def _workflow_dict(x: Workflow) -> dict:
    return {
        "id": x.id, "name": x.name, "lab_id": x.lab_id,
        "parameter_schema": x.parameter_schema.to_dict(),
        "nominal_duration_s": x.nominal_duration_s,
        "flags": sorted(x.flags), "result_kind": x.result_kind,
    }


def _workflow_from(raw: dict) -> Workflow:
    return Workflow(
        id=raw["id"], name=raw["name"], lab_id=raw["lab_id"],
        parameter_schema=ParameterSchema.from_dict(raw.get("parameter_schema", {})),
        nominal_duration_s=raw["nominal_duration_s"],
        flags=set(raw.get("flags", [])), result_kind=raw.get("result_kind", "generic"),
    )


def _job_dict(x: Job) -> dict:
    return {
        "id": x.id, "workflow_id": x.workflow_id, "lab_id": x.lab_id,
        "creator_user_id": x.creator_user_id, "parameters": x.parameters, "state": x.state,
        "created_at": x.created_at, "started_at": x.started_at, "ended_at": x.ended_at,
        "assigned_actor_ids": list(x.assigned_actor_ids),
        "result": None if x.result is None else {
            "kind": x.result.kind, "values": x.result.values, "summary": x.result.summary,
        },
        "attachment_ids": list(x.attachment_ids),
    }


def _job_from(raw: dict) -> Job:
    result = raw.get("result")
    return Job(
        id=raw["id"], workflow_id=raw["workflow_id"], lab_id=raw["lab_id"],
        creator_user_id=raw["creator_user_id"], parameters=dict(raw.get("parameters", {})),
        state=raw["state"], created_at=raw["created_at"],
        started_at=raw.get("started_at"), ended_at=raw.get("ended_at"),
        assigned_actor_ids=list(raw.get("assigned_actor_ids", [])),
        result=None if result is None else JobResult(result["kind"], dict(result["values"]), result["summary"]),
        attachment_ids=list(raw.get("attachment_ids", [])),
    )


def _user_dict(x: User) -> dict:
    return {"id": x.id, "name": x.name, "role": x.role, "permissions": sorted(x.permissions)}


def _user_from(raw: dict) -> User:
    return User(id=raw["id"], name=raw["name"], role=raw["role"], permissions=set(raw.get("permissions", [])))


def _document_dict(x: Document) -> dict:
    return {
        "id": x.id, "title": x.title, "mime": x.mime,
        "data_b64": base64.b64encode(x.data).decode("ascii"),
        "linked_job_id": x.linked_job_id,
    }


def _document_from(raw: dict) -> Document:
    return Document(
        id=raw["id"], title=raw["title"], mime=raw["mime"],
        data=base64.b64decode(raw["data_b64"]), linked_job_id=raw.get("linked_job_id"),
    )


# --- persistence ---

def default_snapshot_path() -> Path:
    return data_dir() / SNAPSHOT_FILENAME


def persist_world(world: World, path: Path | str | None = None) -> Path:
    target = Path(path) if path is not None else default_snapshot_path()
    world.validate()
    try:
        atomic_write_text(target, canonical_json(world.to_payload()))
    except OSError as exc:
        raise PersistenceError(f"cannot write snapshot {target}: {exc}") from exc
    return target


def load_world(path: Path | str | None = None) -> World:
    """Load a snapshot; an absent file yields the bundled seed world."""
    target = Path(path) if path is not None else default_snapshot_path()
    if not target.exists():
        return seed_world()
    try:
        payload = json.loads(target.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(f"cannot read snapshot {target}: {exc}") from exc
    return World.from_payload(payload)


# --- seed fixture: 2 labs, 6 actors, 5 workflows, 0 jobs ---

def seed_world() -> World:
    world = World()
    world.upsert(Lab(id="lab_chem_a", name="Chemistry Lab A", site="Building 2, Floor 1"))
    world.upsert(Lab(id="lab_analytics_b", name="Analytics Lab B", site="Building 2, Floor 3"))

    world.upsert(Actor(
        id="act_hplc_01", name="HPLC-01", kind="instrument",
        capabilities=["hplc"], status="idle", lab_id="lab_analytics_b"))
    world.upsert(Actor(
        id="act_hplc_02", name="HPLC-02", kind="instrument",
        capabilities=["hplc"], status="idle", lab_id="lab_analytics_b"))
    world.upsert(Actor(
        id="act_lh_01", name="LiquidHandler-01", kind="instrument",
        capabilities=["liquid_handling", "plate_prep", "solubility_screen"],
        status="idle", lab_id="lab_chem_a"))
    world.upsert(Actor(
        id="act_synth_01", name="Synthesizer-01", kind="instrument",
        capabilities=["synthesis"], status="idle", lab_id="lab_chem_a"))
    world.upsert(Actor(
        id="act_ms_01", name="MassSpec-01", kind="instrument",
        capabilities=["mass_spec", "instrument_calibration"], status="idle", lab_id="lab_analytics_b"))
    world.upsert(Actor(
        id="act_dana_kim", name="Dana Kim", kind="human",
        capabilities=["synthesis", "plate_prep"], status="idle", lab_id="lab_chem_a"))

    number = ParamSpec(type="number")
    world.upsert(Workflow(
        id="hplc_purity_check", name="hplc_purity_check", lab_id="lab_analytics_b",
        parameter_schema=ParameterSchema({
            "sample": ParamSpec(type="string", required=True, description="sample name or SMILES"),
            "column_temp_c": ParamSpec(type="number", minimum=20, maximum=80),
            "fail_probability": ParamSpec(type="number", minimum=0, maximum=1),
        }),
        nominal_duration_s=1800, flags={"high_stakes"}, result_kind="hplc"))
    world.upsert(Workflow(
        id="compound_synthesis", name="compound_synthesis", lab_id="lab_chem_a",
        parameter_schema=ParameterSchema({
            "target_smiles": ParamSpec(type="string", required=True),
            "scale_mg": ParamSpec(type="number", minimum=0.1),
            "fail_probability": ParamSpec(type="number", minimum=0, maximum=1),
        }),
        nominal_duration_s=7200, flags=set(), result_kind="synthesis"))
    world.upsert(Workflow(
        id="plate_prep", name="plate_prep", lab_id="lab_chem_a",
        parameter_schema=ParameterSchema({
            "plates": ParamSpec(type="integer", required=True, minimum=1, maximum=50),
            "fail_probability": ParamSpec(type="number", minimum=0, maximum=1),
        }),
        nominal_duration_s=900, flags=set(), result_kind="generic"))
    world.upsert(Workflow(
        id="instrument_calibration", name="instrument_calibration", lab_id="lab_analytics_b",
        parameter_schema=ParameterSchema({
            "mode": ParamSpec(type="enum", allowed_values=["quick", "full"], required=True),
            "fail_probability": number,
        }),
        nominal_duration_s=600, flags=set(), result_kind="generic"))
    world.upsert(Workflow(
        id="solubility_screen", name="solubility_screen", lab_id="lab_chem_a",
        parameter_schema=ParameterSchema({
            "sample": ParamSpec(type="string", required=True),
            "solvent": ParamSpec(type="enum", allowed_values=["water", "dmso", "ethanol"]),
            "fail_probability": number,
        }),
        nominal_duration_s=3600, flags=set(), result_kind="generic"))

    lab_a = world.labs["lab_chem_a"]
    lab_a.actor_ids = ["act_lh_01", "act_synth_01", "act_dana_kim"]
    lab_a.workflow_ids = ["compound_synthesis", "plate_prep", "solubility_screen"]
    lab_b = world.labs["lab_analytics_b"]
    lab_b.actor_ids = ["act_hplc_01", "act_hplc_02", "act_ms_01"]
    lab_b.workflow_ids = ["hplc_purity_check", "instrument_calibration"]

    all_tools = set(rosters.ALL_TOOL_NAMES)
    world.upsert(User(id="u1", name="Priya Shah", role="scientist", permissions=set(all_tools)))
    world.upsert(User(id="u2", name="Sam Okafor", role="admin", permissions=set(all_tools)))
    world.validate()
    return world
