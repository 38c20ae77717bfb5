from __future__ import annotations

import math
import random

import pytest

from tippy.engine import (
    JobEngine,
    hplc_noise,
    hplc_retention_minutes,
    nearest_rank,
    simulate_hplc,
)
from tippy.errors import (
    ApprovalRequiredError,
    IllegalTransitionError,
    NoDataError,
    NotFoundError,
    PermissionDeniedError,
    ValidationError,
)
from tippy.world import Job, seed_world


def approved_start(engine, job_id):
    engine.grant_approval(job_id)
    return engine.start_job(job_id)


# --- create_job ---

def test_create_job_nominal(engine):
    job = engine.create_job("hplc_purity_check", {"sample": "aspirin"}, "u1")
    assert job.state == "Created"
    assert job.created_at == engine.clock.now_s
    assert job.assigned_actor_ids == []


def test_create_job_schema_violation_names_field(engine):
    with pytest.raises(ValidationError) as err:
        engine.create_job("hplc_purity_check", {"sample": 42}, "u1")
    assert "sample" in str(err.value)


def test_create_job_unknown_workflow(engine):
    with pytest.raises(NotFoundError):
        engine.create_job("wf_x", {}, "u1")


def test_create_job_missing_permission(engine):
    engine.world.users["u1"].permissions.discard("create_job")
    with pytest.raises(PermissionDeniedError):
        engine.create_job("plate_prep", {"plates": 1}, "u1")


# --- start_job / lifecycle ---

def test_start_then_tick_completes(engine):
    job = engine.create_job("plate_prep", {"plates": 2}, "u1")
    engine.start_job(job.id)
    assert job.state == "Running"  # idle capable actor exists in the fixture
    engine.tick(2000)
    assert job.state == "Completed"
    assert job.result is not None and job.result.kind == "generic"


def test_start_on_completed_is_illegal(engine):
    job = engine.create_job("plate_prep", {"plates": 2}, "u1")
    engine.start_job(job.id)
    engine.tick(2000)
    with pytest.raises(IllegalTransitionError) as err:
        engine.start_job(job.id)
    assert "Completed" in str(err.value)


def test_high_stakes_requires_approval(engine):
    job = engine.create_job("hplc_purity_check", {"sample": "water"}, "u1")
    with pytest.raises(ApprovalRequiredError):
        engine.start_job(job.id)
    engine.grant_approval(job.id)
    assert engine.start_job(job.id).state in ("Queued", "Running")


def test_actor_busy_while_running(engine):
    job = engine.create_job("compound_synthesis", {"target_smiles": "CCO"}, "u1")
    engine.start_job(job.id)
    assert job.state == "Running"
    actor = engine.world.actors[job.assigned_actor_ids[0]]
    assert actor.status == "busy"
    engine.tick(9999)
    assert actor.status == "idle"


def test_queued_waits_for_capable_actor(engine):
    first = engine.create_job("hplc_purity_check", {"sample": "a"}, "u1")
    second = engine.create_job("hplc_purity_check", {"sample": "b"}, "u1")
    third = engine.create_job("hplc_purity_check", {"sample": "c"}, "u1")
    for job_id in (first.id, second.id, third.id):
        approved_start(engine, job_id)
    # two HPLC instruments -> third job queues
    assert [first.state, second.state, third.state] == ["Running", "Running", "Queued"]
    engine.tick(3600)
    assert third.state == "Completed"


def test_cancel_paths(engine):
    created = engine.create_job("plate_prep", {"plates": 1}, "u1")
    engine.cancel_job(created.id)
    assert created.state == "Cancelled" and created.ended_at is not None

    running = engine.create_job("plate_prep", {"plates": 1}, "u1")
    engine.start_job(running.id)
    actor_id = running.assigned_actor_ids[0] if running.assigned_actor_ids else None
    engine.cancel_job(running.id)
    assert running.state == "Cancelled"
    if actor_id:
        assert engine.world.actors[actor_id].status == "idle"
    with pytest.raises(IllegalTransitionError):
        engine.cancel_job(running.id)


# --- tick ---

def test_tick_rejects_nonpositive_dt(engine):
    with pytest.raises(ValidationError):
        engine.tick(0.0)


def test_tick_tie_break_lexicographic(engine):
    # both plate_prep jobs complete within the same tick; with equal due times
    # the event order is lexicographic by job id ("j10" < "j2")
    j2 = engine.create_job("plate_prep", {"plates": 1}, "u1", job_id="j2")
    j10 = engine.create_job("plate_prep", {"plates": 1}, "u1", job_id="j10")
    engine.start_job(j2.id)
    engine.start_job(j10.id)
    # force identical due times
    engine._pending = [(100.0, "j2"), (100.0, "j10")]
    import heapq
    heapq.heapify(engine._pending)
    events = engine.tick(200)
    completions = [e.job_id for e in events if e.state in ("Completed", "Failed")]
    assert completions == ["j10", "j2"]


def test_determinism_same_seed_same_event_log():
    logs = []
    for _ in range(2):
        world = seed_world()
        engine = JobEngine(world, seed=99)
        a = engine.create_job("plate_prep", {"plates": 3}, "u1")
        b = engine.create_job("compound_synthesis", {"target_smiles": "CCO"}, "u1")
        engine.start_job(a.id)
        engine.start_job(b.id)
        engine.tick(500)
        engine.tick(9500)
        logs.append([(e.at_s, e.kind, e.job_id, e.state) for e in engine.event_log])
    assert logs[0] == logs[1]


def test_different_seed_changes_timing():
    durations = []
    for seed in (1, 2):
        world = seed_world()
        engine = JobEngine(world, seed=seed)
        job = engine.create_job("plate_prep", {"plates": 3}, "u1")
        engine.start_job(job.id)
        engine.tick(2000)
        durations.append(job.ended_at)
    assert durations[0] != durations[1]


def test_failure_injection(engine):
    job = engine.create_job("plate_prep", {"plates": 1, "fail_probability": 1.0}, "u1")
    engine.start_job(job.id)
    engine.tick(2000)
    assert job.state == "Failed"
    assert job.result is None
    assert job.ended_at is not None


# --- simulate_hplc ---

def test_hplc_benzene_formula_value():
    # 0.5 + 0.8*1.5 + 0.01*78.114 = 2.48114
    assert abs(hplc_retention_minutes(78.114, 1.5, eps=0.0) - 2.481) <= 1e-3


def test_hplc_water_clamps_at_floor():
    # 0.5 - 0.48 + 0.18015 = 0.20015, already above the 0.2 floor
    value = hplc_retention_minutes(18.015, -0.6, eps=0.0)
    assert abs(value - 0.200) <= 1e-3
    assert hplc_retention_minutes(18.015, -0.6, eps=-0.05) == 0.2  # clamped


def test_hplc_missing_descriptor():
    with pytest.raises(ValidationError):
        simulate_hplc({"mw": 100.0}, 0, "j1")


def test_hplc_noise_bounds_and_determinism():
    for i in range(50):
        eps = hplc_noise(3, f"job-{i}")
        assert -0.05 <= eps <= 0.05
        assert eps == hplc_noise(3, f"job-{i}")


def test_simulate_hplc_result_shape():
    result = simulate_hplc({"mw": 180.159, "logp_est": -0.15}, 0, "job-1")
    assert result.kind == "hplc"
    assert 0.2 <= result.values["retention_time_min"] <= 30.0
    assert 1e4 <= result.values["peak_area"] <= 2e4


# --- queries ---

def test_query_job_status_shapes(engine):
    job = engine.create_job("plate_prep", {"plates": 1}, "u1")
    status = engine.query_job_status(job.id)
    assert status["state"] == "Created" and status["started_at"] is None
    engine.start_job(job.id)
    engine.tick(2000)
    status = engine.query_job_status(job.id)
    assert status["state"] == "Completed"
    assert "result" in status
    with pytest.raises(NotFoundError):
        engine.query_job_status("nope")


def test_query_jobs_filters_and_limit(engine):
    for i in range(60):
        engine.create_job("plate_prep", {"plates": 1}, "u1")
        engine.tick(1)
    assert len(engine.query_jobs()) == 50  # default limit
    assert len(engine.query_jobs(limit=7)) == 7
    completed = engine.query_jobs(state="Completed")
    assert completed == []
    assert engine.query_jobs(workflow_id="hplc_purity_check") == []
    # sorted by created_at descending, ties by id ascending
    jobs = engine.query_jobs(limit=60)
    keys = [(-j.created_at, j.id) for j in jobs]
    assert keys == sorted(keys)


def test_query_jobs_created_bounds(engine):
    early = engine.create_job("plate_prep", {"plates": 1}, "u1")
    engine.tick(100)
    late = engine.create_job("plate_prep", {"plates": 1}, "u1")
    after = engine.query_jobs(created_after=50.0)
    assert [j.id for j in after] == [late.id]
    before = engine.query_jobs(created_before=50.0)
    assert [j.id for j in before] == [early.id]


# --- duration stats ---

def _complete_with_durations(engine, durations):
    """Manufacture completed plate_prep jobs with exact durations."""
    for i, d in enumerate(durations):
        job = Job(id=f"dur{i}", workflow_id="plate_prep", lab_id="lab_chem_a",
                  creator_user_id="u1", parameters={"plates": 1}, state="Completed",
                  created_at=0.0, started_at=10.0, ended_at=10.0 + d)
        from tippy.world import JobResult
        job.result = JobResult(kind="generic", values={}, summary="x")
        engine.world.upsert(job)


def test_duration_stats_nearest_rank(engine):
    _complete_with_durations(engine, [10.0, 20.0, 30.0])
    stats = engine.get_workflow_duration("plate_prep")
    assert stats.mean_s == 20.0
    assert stats.p50_s == 20.0
    assert stats.p90_s == 30.0
    assert stats.min_s == 10.0 and stats.max_s == 30.0


def test_duration_stats_single_value(engine):
    _complete_with_durations(engine, [42.0])
    stats = engine.get_workflow_duration("plate_prep")
    assert stats.mean_s == stats.min_s == stats.max_s == stats.p50_s == stats.p90_s == 42.0


def test_duration_stats_no_data(engine):
    with pytest.raises(NoDataError):
        engine.get_workflow_duration("plate_prep")


def test_duration_stats_ordering_property(engine):
    rng = random.Random(5)
    for trial in range(25):
        world = seed_world()
        eng = JobEngine(world, seed=trial)
        durations = [rng.uniform(1, 1000) for _ in range(rng.randint(1, 40))]
        _complete_with_durations(eng, durations)
        stats = eng.get_workflow_duration("plate_prep")
        assert stats.min_s <= stats.p50_s <= stats.p90_s <= stats.max_s
        assert stats.count == len(durations)
        # nearest-rank oracle: ceil(q*n)-th smallest
        ordered = sorted(durations)
        assert stats.p50_s == ordered[max(1, math.ceil(0.5 * len(ordered))) - 1]
        assert stats.p90_s == ordered[max(1, math.ceil(0.9 * len(ordered))) - 1]


def test_nearest_rank_oracle():
    values = [1.0, 2.0, 3.0, 4.0]
    assert nearest_rank(values, 0.5) == 2.0  # ceil(0.5*4)=2nd
    assert nearest_rank(values, 0.9) == 4.0  # ceil(3.6)=4th
    assert nearest_rank([7.0], 0.9) == 7.0


# --- state machine property ---

LEGAL = {
    ("Created", "Queued"), ("Created", "Cancelled"),
    ("Queued", "Running"), ("Queued", "Cancelled"),
    ("Running", "Completed"), ("Running", "Failed"), ("Running", "Cancelled"),
}


def check_actor_conservation(world):
    running_for = {}
    for job in world.jobs.values():
        if job.state == "Running":
            for aid in job.assigned_actor_ids:
                running_for[aid] = running_for.get(aid, 0) + 1
    for actor in world.actors.values():
        if actor.status == "busy":
            assert running_for.get(actor.id, 0) == 1
        else:
            assert actor.id not in running_for


def test_state_machine_random_commands():
    rng = random.Random(2024)
    for trial in range(40):
        world = seed_world()
        engine = JobEngine(world, seed=trial)
        job_ids = []
        for _ in range(30):
            action = rng.choice(["create", "start", "cancel", "tick"])
            try:
                if action == "create" or not job_ids:
                    wf = rng.choice(["plate_prep", "compound_synthesis", "instrument_calibration"])
                    params = {"plate_prep": {"plates": 1},
                              "compound_synthesis": {"target_smiles": "CCO"},
                              "instrument_calibration": {"mode": "quick"}}[wf]
                    job_ids.append(engine.create_job(wf, params, "u1").id)
                elif action == "start":
                    jid = rng.choice(job_ids)
                    before = world.jobs[jid].state
                    engine.start_job(jid)
                    assert before == "Created"
                elif action == "cancel":
                    jid = rng.choice(job_ids)
                    before = world.jobs[jid].state
                    engine.cancel_job(jid)
                    assert (before, "Cancelled") in LEGAL
                else:
                    engine.tick(rng.uniform(1, 3000))
            except IllegalTransitionError:
                pass
            check_actor_conservation(world)
            world.validate()
