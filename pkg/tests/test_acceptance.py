"""Acceptance criteria, one test per criterion, each timed against its stated
budget and printed as a PASS/FAIL line."""

from __future__ import annotations

import json
import random
import socket
import subprocess
import sys
import threading
import time
import urllib.request
from contextlib import contextmanager

from tippy.app import DEFAULT_CONFIG_DIR, build_app
from tippy.engine import JobEngine, hplc_retention_minutes, simulate_hplc
from tippy.errors import IllegalTransitionError
from tippy.gateway import make_server
from tippy.lineage import ConfigLineage
from tippy.memory import MemoryStore, cosine, embed
from tippy.molkit.names import name_table
from tippy.molkit.parser import parse_smiles, to_smiles
from tippy.molkit.properties import molecule_info_from_smiles
from tippy.molkit.server import build_molecule_server
from tippy.tools import toolset_for
from tippy.world import seed_world

from test_pdf import parse_xref, scan_object_positions
from test_smiles import oracle_hydrogens, oracle_mw, oracle_rings
from tippy.molkit.properties import hill_formula


@contextmanager
def criterion(name: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] FAIL {name}")
        raise
    elapsed = time.perf_counter() - start
    status = "PASS" if elapsed < budget_s else "FAIL (over budget)"
    print(f"[ACCEPTANCE] {status} {name} ({elapsed:.2f}s < {budget_s:g}s)")
    assert elapsed < budget_s, f"{name} exceeded its {budget_s}s budget"


# ---------------------------------------------------------------- 1. rosters

def test_roster_conformance():
    with criterion("roster conformance", 1.0):
        server = build_molecule_server()
        raw = server.handle_message(json.dumps(
            {"jsonrpc": "2.0", "id": 1, "method": "tools/list"}).encode())
        tools = json.loads(raw)["result"]["tools"]
        assert len(tools) == 4  # the molecule agent's four tools

        analysis = toolset_for("analysis").tool_names
        assert len(analysis) == 10
        assert set(analysis) == {
            "attach_pdf_of_markdown", "fuzzy_lookup_actor", "fuzzy_lookup_lab",
            "get_lab", "get_workflow_duration", "list_actors", "list_labs",
            "query_jobs", "query_job_status", "user_info",
        }
        report = toolset_for("report").tool_names
        assert len(report) == 8
        assert set(report) == {
            "attach_pdf_of_markdown", "fuzzy_lookup_lab", "get_lab",
            "get_workflow_duration", "list_labs", "query_jobs",
            "query_job_status", "user_info",
        }
        # The lab agent's roster is described as "13 MCP tools" but the
        # accompanying list has 14 bullets; this build implements all 14
        # listed tools and records the count discrepancy here.
        lab = toolset_for("lab").tool_names
        assert len(lab) == 14
        assert set(analysis) <= set(lab) and set(report) <= set(lab)


# ---------------------------------------------------- 2. MCP conformance

def _stdio_roundtrip(messages: list[dict | str]) -> list[dict]:
    proc = subprocess.Popen(
        [sys.executable, "-m", "tippy", "mcp-serve", "--transport", "stdio",
         "--server", "molecule"],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
    )
    payload = "".join(
        (m if isinstance(m, str) else json.dumps(m)) + "\n" for m in messages)
    out, err = proc.communicate(payload.encode(), timeout=30)
    assert proc.returncode == 0, err.decode()
    return [json.loads(line) for line in out.decode().splitlines() if line.strip()]


def test_mcp_conformance_suite(tmp_path):
    with criterion("MCP conformance suite", 5.0):
        cases = 0

        # --- stdio transport, real subprocess over the CLI ---
        responses = _stdio_roundtrip([
            {"jsonrpc": "2.0", "id": 1, "method": "initialize"},
            {"jsonrpc": "2.0", "method": "notifications/initialized"},
            {"jsonrpc": "2.0", "id": 2, "method": "tools/list"},
            {"jsonrpc": "2.0", "id": 3, "method": "tools/call",
             "params": {"name": "molecule_info_from_smiles", "arguments": {"text": "CCO"}}},
            "{not json",
            {"jsonrpc": "2.0", "id": 4, "method": "tools/frobnicate"},
            {"jsonrpc": "2.0", "id": 5, "method": "tools/call",
             "params": {"name": "molecule_info_from_smiles", "arguments": {"text": 7}}},
            {"jsonrpc": "2.0", "method": "tools/list"},  # notification: no response
        ])
        assert len(responses) == 6  # two notifications never answered
        cases += 2
        by_id = {r.get("id"): r for r in responses}
        assert by_id[1]["result"]["protocol_version"] == "2024-11-05"; cases += 1
        assert len(by_id[2]["result"]["tools"]) == 4; cases += 1
        assert "46.069" in by_id[3]["result"]["content"][0]["text"]; cases += 1
        assert by_id[3]["result"]["isError"] is False; cases += 1
        assert by_id[None]["error"]["code"] == -32700; cases += 1
        assert by_id[4]["error"]["code"] == -32601; cases += 1
        assert by_id[5]["error"]["code"] == -32602; cases += 1

        # --- HTTP transport over the gateway mount ---
        app = build_app(data_dir=tmp_path / "data", seed=0)
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        server = make_server(app, f"127.0.0.1:{port}")
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{port}/mcp"

        def post(body: bytes):
            req = urllib.request.Request(base, data=body, method="POST",
                                         headers={"Content-Type": "application/json"})
            with urllib.request.urlopen(req, timeout=10) as resp:
                data = resp.read()
                return resp.status, json.loads(data) if data else None

        try:
            status, payload = post(json.dumps(
                {"jsonrpc": "2.0", "id": 10, "method": "initialize"}).encode())
            assert status == 200
            assert payload["result"]["protocol_version"] == "2024-11-05"; cases += 1
            status, payload = post(json.dumps(
                {"jsonrpc": "2.0", "id": 11, "method": "tools/list"}).encode())
            assert len(payload["result"]["tools"]) == 14; cases += 1
            status, payload = post(json.dumps(
                {"jsonrpc": "2.0", "id": 12, "method": "tools/call",
                 "params": {"name": "list_labs", "arguments": {}}}).encode())
            assert "Chemistry Lab A" in payload["result"]["content"][0]["text"]; cases += 1
            assert payload["id"] == 12; cases += 1
            status, payload = post(b"%%% nope")
            assert payload["error"]["code"] == -32700; cases += 1
            status, payload = post(json.dumps(
                {"jsonrpc": "2.0", "id": 13, "method": "bogus/method"}).encode())
            assert payload["error"]["code"] == -32601; cases += 1
            status, payload = post(json.dumps(
                {"jsonrpc": "2.0", "id": 14, "method": "tools/call",
                 "params": {"name": "get_lab", "arguments": {}}}).encode())
            assert payload["error"]["code"] == -32602; cases += 1
            status, payload = post(json.dumps(
                {"jsonrpc": "2.0", "id": 15, "method": "tools/call",
                 "params": {"name": "create_job",
                            "arguments": {"workflow_id": "hplc_purity_check",
                                          "parameters": {"sample": 42, "bogus": 1}}}}).encode())
            assert payload["error"]["code"] == -32602
            assert "sample" in json.dumps(payload["error"]); cases += 1
            status, payload = post(json.dumps(
                {"jsonrpc": "2.0", "method": "notifications/initialized"}).encode())
            assert status == 204 and payload is None; cases += 1
            status, payload = post(json.dumps(
                {"jsonrpc": "2.0", "id": 16, "method": "tools/call",
                 "params": {"name": "get_lab",
                            "arguments": {"lab_id": "nope"}}}).encode())
            assert payload["result"]["isError"] is True; cases += 1
            status, payload = post(b"[1, 2]")
            assert payload["error"]["code"] == -32600; cases += 1
        finally:
            server.shutdown()
        assert cases >= 20, f"only {cases} conformance cases ran"


# ------------------------------------------- 3. job state machine property

def _run_command_sequence(seed: int, trace: list | None = None):
    rng = random.Random(seed)
    world = seed_world()
    engine = JobEngine(world, seed=seed)
    job_ids: list[str] = []
    workflows = {
        "plate_prep": {"plates": 1},
        "compound_synthesis": {"target_smiles": "CCO"},
        "instrument_calibration": {"mode": "quick"},
        "solubility_screen": {"sample": "caffeine"},
    }
    for _ in range(8):
        action = rng.choice(("create", "start", "start", "cancel", "tick"))
        try:
            if action == "create" or not job_ids:
                wf = rng.choice(sorted(workflows))
                job_ids.append(engine.create_job(wf, workflows[wf], "u1").id)
            elif action == "start":
                jid = rng.choice(job_ids)
                state_before = world.jobs[jid].state
                engine.start_job(jid)
                assert state_before == "Created", "illegal start accepted"
            elif action == "cancel":
                jid = rng.choice(job_ids)
                state_before = world.jobs[jid].state
                engine.cancel_job(jid)
                assert state_before in ("Created", "Queued", "Running")
            else:
                engine.tick(rng.uniform(1.0, 2500.0))
        except IllegalTransitionError:
            state_after = {j: world.jobs[j].state for j in job_ids}
            assert all(s in ("Created", "Queued", "Running", "Completed",
                             "Failed", "Cancelled") for s in state_after.values())
        # actor conservation after every step
        running_for: dict[str, int] = {}
        for job in world.jobs.values():
            if job.state == "Running":
                for aid in job.assigned_actor_ids:
                    running_for[aid] = running_for.get(aid, 0) + 1
        for actor in world.actors.values():
            if actor.status == "busy":
                assert running_for.get(actor.id) == 1
            else:
                assert actor.id not in running_for
    world.validate()
    if trace is not None:
        trace.append(json.dumps([e.to_dict() for e in engine.event_log],
                                sort_keys=True).encode())


def test_job_state_machine_property():
    with criterion("job state-machine property (1000 sequences)", 30.0):
        for seq in range(1000):
            _run_command_sequence(seq)
        # identical seeds reproduce identical event logs byte-for-byte
        for seq in range(0, 1000, 50):
            logs: list[bytes] = []
            _run_command_sequence(seq, logs)
            _run_command_sequence(seq, logs)
            assert logs[0] == logs[1], f"seed {seq} diverged"


# ------------------------------------------------- 4. molecule oracle suite

CORPUS_50 = [
    "water", "methanol", "ethanol", "isopropanol", "acetone", "acetic acid",
    "formic acid", "benzene", "toluene", "phenol", "aniline", "styrene",
    "naphthalene", "anthracene", "pyridine", "pyrrole", "furan", "thiophene",
    "imidazole", "indole", "quinoline", "aspirin", "paracetamol", "ibuprofen",
    "caffeine", "theobromine", "nicotine", "dopamine", "serotonin", "melatonin",
    "glycine", "alanine", "serine", "cysteine", "proline", "phenylalanine",
    "tryptophan", "histidine", "glucose", "fructose", "sorbitol",
    "ascorbic acid", "citric acid", "vanillin", "menthol", "camphor",
    "limonene", "urea", "chloroform", "taurine",
]


def test_molecule_oracle_suite():
    with criterion("molecule oracle suite (50-molecule corpus)", 10.0):
        table = name_table()
        assert len(CORPUS_50) == 50
        for name in CORPUS_50:
            smiles = table[name]
            mol = parse_smiles(smiles)
            info = molecule_info_from_smiles(smiles)
            # mass oracle within 1e-3
            assert abs(info.mw - oracle_mw(mol)) < 1e-3, name
            # Hill-order formula oracle, exact
            counts: dict[str, int] = {}
            for idx, atom in enumerate(mol.atoms):
                counts[atom.element] = counts.get(atom.element, 0) + 1
                h = oracle_hydrogens(mol, idx)
                if h:
                    counts["H"] = counts.get("H", 0) + h
            assert info.formula == hill_formula(counts), name
            # cyclomatic ring count, cross-checked by independent cycle
            # counting on small members
            assert info.rings == len(mol.bonds) - len(mol.atoms) + len(mol.components()), name
            if len(mol.atoms) <= 10:
                assert info.rings == oracle_rings(mol), name
            # re-emission round trip preserves formula / mw / rings
            reparsed_info = molecule_info_from_smiles(to_smiles(mol))
            assert reparsed_info.formula == info.formula, name
            assert abs(reparsed_info.mw - info.mw) < 1e-9, name
            assert reparsed_info.rings == info.rings, name


# --------------------------------------------------- 5. HPLC determinism

def test_hplc_determinism():
    with criterion("HPLC determinism", 1.0):
        benzene = molecule_info_from_smiles("c1ccccc1")
        assert abs(hplc_retention_minutes(benzene.mw, benzene.logp_est, eps=0.0) - 2.481) <= 1e-3
        descriptors = {"mw": benzene.mw, "logp_est": benzene.logp_est}
        reference = simulate_hplc(descriptors, seed=12345, job_id="job-0042")
        for _ in range(100):
            again = simulate_hplc(descriptors, seed=12345, job_id="job-0042")
            assert again.values == reference.values


# --------------------------------------------------- 6. guardrail corpora

def test_guardrail_corpora(tmp_path):
    with criterion("guardrail corpora", 5.0):
        app = build_app(data_dir=tmp_path / "data", seed=0)
        corpora = DEFAULT_CONFIG_DIR / "corpora"
        injections = [l for l in (corpora / "injection_corpus.txt").read_text().splitlines()
                      if l.strip() and not l.startswith("#")]
        benign = [l for l in (corpora / "benign_corpus.txt").read_text().splitlines()
                  if l.strip() and not l.startswith("#")]
        assert len(injections) >= 20 and len(benign) >= 30
        for line in injections:
            verdict = app.guardrails.guard_input(line)
            assert verdict.blocked and verdict.category == "prompt_injection", line
        for line in benign:
            assert not app.guardrails.guard_input(line).blocked, line
        # blocked turns never contain a model_call span
        for i, line in enumerate(injections):
            conv = f"guard-{i}"
            result = app.chat(conv, "u1", line)
            assert result["status"] == "blocked"
            assert all(s.kind != "model_call" for s in app.tracer.spans_for(conv)), line


# ------------------------------------------------ 7. end-to-end DMTA flow

def test_end_to_end_scripted_dmta(tmp_path):
    with criterion("end-to-end scripted DMTA scenario", 10.0):
        app = build_app(data_dir=tmp_path / "data", seed=7)
        conv = "dmta"

        r1 = app.chat(conv, "u1", "get SMILES for aspirin")
        assert r1["status"] == "ok"
        spans = app.tracer.spans_for(conv)
        assert [s.name for s in spans if s.kind == "handoff"] == ["supervisor->molecule"]
        assert [s.name for s in spans if s.kind == "tool_call"] == [
            "smiles_from_molecule_name", "molecule_info_from_smiles"]

        r2 = app.chat(conv, "u1", "run an HPLC purity check on it")
        assert r2["status"] == "pending_approval"
        job = next(iter(app.world.jobs.values()))
        assert job.state == "Created"
        assert job.parameters["sample"] == "CC(=O)Oc1ccccc1C(=O)O"

        r3 = app.resolve_approval(r2["approval_id"], "approve", "u2")
        assert r3["approval"]["state"] == "approved"
        assert r3["turn"]["status"] == "ok"
        states_seen = [e.state for e in app.engine.event_log if e.job_id == job.id]
        assert states_seen[:3] == ["Created", "Queued", "Running"]

        app.tick(3600)
        assert job.state == "Completed"
        assert [e.state for e in app.engine.event_log if e.job_id == job.id] == [
            "Created", "Queued", "Running", "Completed"]
        assert job.result is not None and job.result.kind == "hplc"
        assert 0.2 <= job.result.values["retention_time_min"] <= 30.0

        r4 = app.chat(conv, "u1", "attach a summary report")
        assert r4["status"] == "ok"
        assert len(job.attachment_ids) == 1
        doc = app.world.documents[job.attachment_ids[0]]
        assert doc.data.startswith(b"%PDF-1.4")
        assert parse_xref(doc.data) == scan_object_positions(doc.data)

        kinds = {s.kind for s in app.tracer.spans_for(conv)}
        assert kinds == {"turn", "model_call", "tool_call", "handoff", "guardrail"}
        tree = app.traces(conv)
        assert all(node["kind"] == "turn" for node in tree)


# ------------------------------------------------------- 8. RAG memory

def test_rag_memory(tmp_path):
    with criterion("RAG memory", 5.0):
        rng = random.Random(2718)
        vocabulary = ("hplc retention column gradient sample peak purity yield "
                      "synthesis plate actor lab job workflow molecule smiles "
                      "mass assay buffer temperature solvent calibration").split()
        path = tmp_path / "memory.jsonl"
        store = MemoryStore(path)
        for _ in range(100):
            store.add(" ".join(rng.choice(vocabulary) for _ in range(rng.randint(3, 9))), {})
        queries = [" ".join(rng.choice(vocabulary) for _ in range(rng.randint(2, 5)))
                   for _ in range(50)]
        for query in queries:
            top = store.search(query, k=1)[0]
            q = embed(query)
            brute = sorted(((round(cosine(q, r["embedding"]), 9), r["id"])
                            for r in store.records), key=lambda t: (-t[0], t[1]))
            assert (top["score"], top["id"]) == brute[0], query
        reloaded = MemoryStore(path)
        assert len(reloaded) == 100
        for query in queries:
            assert reloaded.search(query, k=5) == store.search(query, k=5)


# --------------------------------------------------- 9. config lineage

def test_config_lineage(tmp_path):
    with criterion("config lineage", 1.0):
        from tippy.engine import VirtualClock
        clock = VirtualClock()
        root = tmp_path / "config"
        (root / "guardrails").mkdir(parents=True)
        rules = root / "guardrails" / "rules.txt"
        lineage = ConfigLineage(clock, tmp_path / "lineage.jsonl")
        hashes = []
        for revision in ("alpha", "beta", "gamma"):
            rules.write_text(revision, encoding="utf-8")
            hashes.append(lineage.snapshot_config(root).hash)
        assert len(set(hashes)) == 3
        assert lineage.chain_from(hashes[2]) == [hashes[2], hashes[1], hashes[0]]
        # unchanged re-snapshot deduplicates
        assert lineage.snapshot_config(root).hash == hashes[2]
        assert len(lineage.snapshots) == 3
        # tag round trip is byte-identical
        lineage.tag(hashes[0], "v1")
        recovered = lineage.get_by_tag("v1")
        assert recovered.payload["files"]["guardrails/rules.txt"] == "alpha"
