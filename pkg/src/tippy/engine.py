"""Job lifecycle execution over a virtual clock.

A discrete-event loop: start_job queues work, the scheduler binds idle capable
actors, and tick() fires due completions in (due_at, job_id) order. Every
stochastic draw is keyed off (seed, job_id, purpose) so identical seeds and
command sequences replay to byte-identical event logs.
"""

from __future__ import annotations

import heapq
import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    ApprovalRequiredError,
    IllegalTransitionError,
    NoDataError,
    PermissionDeniedError,
    ValidationError,
)
from .molkit import names as mol_names
from .molkit import parser as mol_parser
from .molkit import properties as mol_props
from .util import stable_hash64, unit_draw
from .world import Job, JobResult, World

# Documented simulator constants (also snapshotted into config lineage).
CONSTANTS = {
    "hplc_intercept": 0.5,
    "hplc_logp_coeff": 0.8,
    "hplc_mw_coeff": 0.01,
    "hplc_noise_halfwidth": 0.05,
    "hplc_rt_min": 0.2,
    "hplc_rt_max": 30.0,
    "duration_jitter_halfwidth": 0.1,
    "query_limit_default": 50,
}

LEGAL_TRANSITIONS = {
    ("Created", "Queued"),
    ("Created", "Cancelled"),
    ("Queued", "Running"),
    ("Queued", "Cancelled"),
    ("Running", "Completed"),
    ("Running", "Failed"),
    ("Running", "Cancelled"),
}


@dataclass
class VirtualClock:
    now_s: float = 0.0
    seed: int = 0

    def advance(self, dt_s: float) -> None:
        if dt_s <= 0:
            raise ValidationError("dt_s must be > 0", ["dt_s"])
        self.now_s += dt_s


@dataclass
class Event:
    at_s: float
    kind: str
    job_id: str
    state: str | None = None

    def to_dict(self) -> dict:
        out = {"at_s": self.at_s, "kind": self.kind, "job_id": self.job_id}
        if self.state is not None:
            out["state"] = self.state
        return out


@dataclass
class DurationStats:
    workflow_id: str
    count: int
    mean_s: float
    min_s: float
    max_s: float
    p50_s: float
    p90_s: float

    def to_dict(self) -> dict:
        return {
            "workflow_id": self.workflow_id, "count": self.count, "mean_s": self.mean_s,
            "min_s": self.min_s, "max_s": self.max_s, "p50_s": self.p50_s, "p90_s": self.p90_s,
        }


def nearest_rank(sorted_values: list[float], q: float) -> float:
    """q-quantile by nearest rank: the ceil(q*n)-th smallest value (1-indexed)."""
    import math
    n = len(sorted_values)
    rank = max(1, math.ceil(q * n))
    return sorted_values[rank - 1]


def hplc_retention_minutes(mw: float, logp_est: float, eps: float = 0.0) -> float:
    """clamp(0.5 + 0.8*logp_est + 0.01*mw + eps, 0.2, 30.0)"""
    rt = (CONSTANTS["hplc_intercept"] + CONSTANTS["hplc_logp_coeff"] * logp_est
          + CONSTANTS["hplc_mw_coeff"] * mw + eps)
    return min(max(rt, CONSTANTS["hplc_rt_min"]), CONSTANTS["hplc_rt_max"])


def hplc_noise(seed: int, job_id: str) -> float:
    """Uniform in [-0.05, 0.05], keyed by (seed, job_id)."""
    return (unit_draw(seed, job_id) * 2 - 1) * CONSTANTS["hplc_noise_halfwidth"]


def simulate_hplc(molecule_descriptors: dict, seed: int, job_id: str) -> JobResult:
    """Deterministic HPLC readout from molecular descriptors (mw, logp_est)."""
    missing = [k for k in ("mw", "logp_est") if k not in molecule_descriptors]
    if missing:
        raise ValidationError(f"missing descriptors: {', '.join(missing)}", missing)
    mw = float(molecule_descriptors["mw"])
    logp = float(molecule_descriptors["logp_est"])
    rt = hplc_retention_minutes(mw, logp, hplc_noise(seed, job_id))
    frac = (stable_hash64(job_id) % 10**6) / 10**6
    peak_area = 1e4 * (1 + frac)
    return JobResult(
        kind="hplc",
        values={"retention_time_min": round(rt, 6), "peak_area": round(peak_area, 3)},
        summary=f"HPLC retention_time_min={rt:.3f} peak_area={peak_area:.1f}",
    )


def resolve_descriptors(sample: str) -> dict:
    """Best-effort descriptors for an HPLC sample string.

    Tries SMILES first, then the compound-name table; anything else gets
    stable pseudo-descriptors hashed from the string so every sample yields a
    reproducible readout.
    """
    for text in (sample,):
        try:
            mol = mol_parser.parse_smiles(text)
            info = mol_props.molecule_info(mol)
            return {"mw": info.mw, "logp_est": info.logp_est, "resolved": "smiles"}
        except Exception:
            pass
    try:
        hit = mol_names.smiles_from_molecule_name(sample)
        mol = mol_parser.parse_smiles(hit["smiles"])
        info = mol_props.molecule_info(mol)
        return {"mw": info.mw, "logp_est": info.logp_est, "resolved": "name"}
    except Exception:
        h = stable_hash64("sample", sample)
        return {
            "mw": 50.0 + (h % 45000) / 100.0,
            "logp_est": -1.0 + ((h >> 16) % 600) / 100.0,
            "resolved": "pseudo",
        }


class JobEngine:
    """Single logical event loop over the virtual clock; external callers are
    serialized by one lock, and tick is never reentrant."""

    def __init__(self, world: World, seed: int = 0, events_path: Path | None = None):
        self.world = world
        self.clock = VirtualClock(now_s=0.0, seed=seed)
        self.events_path = events_path
        self.event_log: list[Event] = []
        self._pending: list[tuple[float, str]] = []  # (due_at, job_id) heap
        self._approved_jobs: set[str] = set()
        self._job_counter = 0
        self._lock = threading.RLock()
        self._listeners: list = []

    # --- wiring ---

    def add_listener(self, fn) -> None:
        """fn(event) called for every emitted event, in emission order."""
        self._listeners.append(fn)

    def _emit(self, kind: str, job_id: str, state: str | None, at_s: float | None = None) -> Event:
        event = Event(at_s=self.clock.now_s if at_s is None else at_s, kind=kind, job_id=job_id, state=state)
        self.event_log.append(event)
        if self.events_path is not None:
            self.events_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.events_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
        for fn in self._listeners:
            fn(event)
        return event

    # --- approvals (granted by the gateway's approval flow) ---

    def grant_approval(self, job_id: str) -> None:
        with self._lock:
            self._approved_jobs.add(job_id)

    def is_approved(self, job_id: str) -> bool:
        return job_id in self._approved_jobs

    def needs_approval(self, job_id: str) -> bool:
        job = self.world.get("job", job_id)
        workflow = self.world.get("workflow", job.workflow_id)
        return workflow.high_stakes and job_id not in self._approved_jobs

    # --- operations ---

    def create_job(self, workflow_id: str, parameters: dict, user_id: str, job_id: str | None = None) -> Job:
        with self._lock:
            workflow = self.world.get("workflow", workflow_id)
            user = self.world.get("user", user_id)
            if "create_job" not in user.permissions:
                raise PermissionDeniedError(f"user {user_id!r} lacks permission create_job")
            workflow.parameter_schema.require_valid(parameters)
            if job_id is None:
                self._job_counter += 1
                job_id = f"job-{self._job_counter:04d}"
            if job_id in self.world.jobs:
                raise ValidationError(f"job id {job_id!r} already exists", ["id"])
            job = Job(
                id=job_id, workflow_id=workflow_id, lab_id=workflow.lab_id,
                creator_user_id=user_id, parameters=dict(parameters),
                state="Created", created_at=self.clock.now_s,
            )
            self.world.upsert(job)
            self._emit("job_state", job.id, "Created")
            return job

    def start_job(self, job_id: str) -> Job:
        with self._lock:
            job = self.world.get("job", job_id)
            if job.state != "Created":
                raise IllegalTransitionError(job.state, "start")
            workflow = self.world.get("workflow", job.workflow_id)
            if workflow.high_stakes and job_id not in self._approved_jobs:
                raise ApprovalRequiredError(job_id)
            self._transition(job, "Queued")
            self._try_schedule()
            return job

    def cancel_job(self, job_id: str) -> Job:
        with self._lock:
            job = self.world.get("job", job_id)
            if job.state not in ("Created", "Queued", "Running"):
                raise IllegalTransitionError(job.state, "cancel")
            if job.state == "Running":
                self._free_actors(job)
                self._pending = [(t, j) for t, j in self._pending if j != job_id]
                heapq.heapify(self._pending)
            job.started_at = None
            job.assigned_actor_ids = []
            job.ended_at = self.clock.now_s
            self._transition(job, "Cancelled")
            self._try_schedule()
            return job

    def tick(self, dt_s: float) -> list[Event]:
        """Advance virtual time; fire due completions in (due_at, job_id) order."""
        with self._lock:
            if dt_s <= 0:
                raise ValidationError("dt_s must be > 0", ["dt_s"])
            target = self.clock.now_s + dt_s
            emitted_start = len(self.event_log)
            while self._pending and self._pending[0][0] <= target:
                due_at, job_id = heapq.heappop(self._pending)
                self.clock.now_s = max(self.clock.now_s, due_at)
                self._complete(job_id, due_at)
                # freed actors may pick up queued work at this instant
                self._try_schedule()
            self.clock.now_s = target
            return self.event_log[emitted_start:]

    def query_job_status(self, job_id: str) -> dict:
        job = self.world.get("job", job_id)
        out = {
            "job_id": job.id,
            "workflow_id": job.workflow_id,
            "state": job.state,
            "created_at": job.created_at,
            "started_at": job.started_at,
            "ended_at": job.ended_at,
            "assigned_actor_ids": list(job.assigned_actor_ids),
        }
        if job.result is not None:
            out["result"] = {"kind": job.result.kind, "values": job.result.values, "summary": job.result.summary}
        if job.attachment_ids:
            out["attachment_ids"] = list(job.attachment_ids)
        return out

    def query_jobs(self, lab_id: str | None = None, workflow_id: str | None = None,
                   state: str | None = None, created_after: float | None = None,
                   created_before: float | None = None, limit: int | None = None) -> list[Job]:
        selected = []
        for job in self.world.jobs.values():
            if lab_id is not None and job.lab_id != lab_id:
                continue
            if workflow_id is not None and job.workflow_id != workflow_id:
                continue
            if state is not None and job.state != state:
                continue
            if created_after is not None and not job.created_at > created_after:
                continue
            if created_before is not None and not job.created_at < created_before:
                continue
            selected.append(job)
        selected.sort(key=lambda j: (-j.created_at, j.id))
        cap = CONSTANTS["query_limit_default"] if limit is None else limit
        return selected[:cap]

    def get_workflow_duration(self, workflow_id: str) -> DurationStats:
        self.world.get("workflow", workflow_id)
        durations = sorted(
            job.ended_at - job.started_at
            for job in self.world.jobs.values()
            if job.workflow_id == workflow_id and job.state == "Completed"
        )
        if not durations:
            raise NoDataError(f"no completed jobs for workflow {workflow_id!r}")
        return DurationStats(
            workflow_id=workflow_id,
            count=len(durations),
            mean_s=sum(durations) / len(durations),
            min_s=durations[0],
            max_s=durations[-1],
            p50_s=nearest_rank(durations, 0.5),
            p90_s=nearest_rank(durations, 0.9),
        )

    # --- internals ---

    def _transition(self, job: Job, new_state: str) -> None:
        if (job.state, new_state) not in LEGAL_TRANSITIONS:
            raise IllegalTransitionError(job.state, f"enter {new_state}")
        job.state = new_state
        self._emit("job_state", job.id, new_state)

    def _capable(self, actor, workflow) -> bool:
        if actor.lab_id != workflow.lab_id:
            return False
        return workflow.result_kind in actor.capabilities or workflow.name in actor.capabilities

    def _try_schedule(self) -> None:
        queued = sorted(
            (j for j in self.world.jobs.values() if j.state == "Queued"),
            key=lambda j: (j.created_at, j.id),
        )
        for job in queued:
            workflow = self.world.workflows[job.workflow_id]
            candidates = sorted(
                (a for a in self.world.actors.values()
                 if a.status == "idle" and self._capable(a, workflow)),
                key=lambda a: a.id,
            )
            if not candidates:
                continue
            actor = candidates[0]
            actor.status = "busy"
            job.assigned_actor_ids = [actor.id]
            job.started_at = self.clock.now_s
            jitter = (unit_draw(self.clock.seed, job.id, "jitter") * 2 - 1) * CONSTANTS["duration_jitter_halfwidth"]
            due_at = job.started_at + workflow.nominal_duration_s * (1 + jitter)
            heapq.heappush(self._pending, (due_at, job.id))
            self._transition(job, "Running")

    def _free_actors(self, job: Job) -> None:
        for aid in job.assigned_actor_ids:
            self.world.actors[aid].status = "idle"

    def _complete(self, job_id: str, due_at: float) -> None:
        job = self.world.jobs[job_id]
        workflow = self.world.workflows[job.workflow_id]
        job.ended_at = due_at
        self._free_actors(job)
        fail_p = float(job.parameters.get("fail_probability", 0.0))
        if fail_p > 0 and unit_draw(self.clock.seed, job.id, "fail") < fail_p:
            job.result = None
            self._transition(job, "Failed")
            return
        job.result = self._make_result(job, workflow)
        self._transition(job, "Completed")

    def _make_result(self, job: Job, workflow) -> JobResult:
        if workflow.result_kind == "hplc":
            sample = str(job.parameters.get("sample", job.parameters.get("smiles", "")))
            descriptors = resolve_descriptors(sample)
            return simulate_hplc(descriptors, self.clock.seed, job.id)
        if workflow.result_kind == "synthesis":
            yield_pct = 40.0 + unit_draw(self.clock.seed, job.id, "yield") * 55.0
            purity_pct = 80.0 + unit_draw(self.clock.seed, job.id, "purity") * 19.5
            return JobResult(
                kind="synthesis",
                values={"yield_pct": round(yield_pct, 2), "purity_pct": round(purity_pct, 2)},
                summary=f"synthesis yield={yield_pct:.1f}% purity={purity_pct:.1f}%",
            )
        elapsed = job.ended_at - job.started_at
        return JobResult(
            kind="generic",
            values={"elapsed_s": round(elapsed, 3)},
            summary=f"completed in {elapsed:.0f} virtual seconds",
        )
