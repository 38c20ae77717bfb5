"""The lab-side tool catalog: 14 tools over the world and job engine, plus
per-agent toolsets and the fuzzy entity lookups.

All handlers return JSON text so agents (and the scripted model's rules) can
read the results verbatim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import rosters
from .engine import JobEngine
from .errors import NoConfidentMatchError, NoDataError, NotFoundError
from .fuzzy import FuzzyMatch, rank_candidates
from .mcp.server import CallContext, McpServer, ToolDescriptor
from .pdf import render_markdown_pdf
from .schema import ParameterSchema, ParamSpec
from .world import Document, World

LOOKUP_THRESHOLD = 0.5


@dataclass
class AgentToolset:
    agent: str
    tool_names: tuple[str, ...]


def toolset_for(agent: str) -> AgentToolset:
    try:
        return AgentToolset(agent=agent, tool_names=rosters.AGENT_TOOLSETS[agent])
    except KeyError:
        raise NotFoundError(f"unknown agent {agent!r}") from None


def _dump(payload) -> str:
    return json.dumps(payload, sort_keys=True)


# --- fuzzy lookups ---

def fuzzy_lookup_actor(world: World, query: str, threshold: float = LOOKUP_THRESHOLD) -> FuzzyMatch:
    return _fuzzy_lookup(query, [(a.id, a.name) for a in world.actors.values()], "actor", threshold)


def fuzzy_lookup_lab(world: World, query: str, threshold: float = LOOKUP_THRESHOLD) -> FuzzyMatch:
    return _fuzzy_lookup(query, [(l.id, l.name) for l in world.labs.values()], "lab", threshold)


def _fuzzy_lookup(query: str, candidates: list[tuple[str, str]], kind: str,
                  threshold: float = LOOKUP_THRESHOLD) -> FuzzyMatch:
    if not candidates:
        raise NoDataError(f"no {kind}s in world")
    ranked = rank_candidates(query, candidates)
    best_score, best_id, best_name = ranked[0]
    alternates = [
        {"candidate_id": cid, "candidate_name": name, "score": round(score, 6)}
        for score, cid, name in ranked[:3]
    ]
    if best_score < threshold:
        raise NoConfidentMatchError(query, [a["candidate_name"] for a in alternates])
    return FuzzyMatch(candidate_id=best_id, candidate_name=best_name,
                      score=best_score, alternates=alternates)


# --- document pipeline ---

def attach_pdf_of_markdown(world: World, job_id: str, title: str, markdown_text: str) -> str:
    job = world.get("job", job_id)
    pdf_bytes = render_markdown_pdf(markdown_text)
    doc_id = f"doc-{len(world.documents) + 1:04d}"
    while doc_id in world.documents:
        doc_id = f"doc-{int(doc_id.split('-')[1]) + 1:04d}"
    world.upsert(Document(id=doc_id, title=title, mime="application/pdf",
                          data=pdf_bytes, linked_job_id=job_id))
    job.attachment_ids.append(doc_id)
    return doc_id


# --- registration on the main MCP server ---

def build_lab_server(world: World, engine: JobEngine, name: str = "tippy-lab") -> McpServer:
    """Main MCP server with the full 14-tool lab-side catalog."""
    server = McpServer(name=name)
    for descriptor, handler in _tool_entries(world, engine):
        server.register_tool(descriptor, handler)
    return server


def _tool_entries(world: World, engine: JobEngine):
    s = ParamSpec  # local alias; schemas below stay readable

    def desc(name, description, properties, requires_approval=False):
        return ToolDescriptor(
            name=name, description=description,
            input_schema=ParameterSchema(properties),
            category=rosters.TOOL_CATEGORIES[name],
            requires_approval=requires_approval,
        )

    def create_job(args, ctx: CallContext):
        job = engine.create_job(args["workflow_id"], args.get("parameters", {}), ctx.user_id)
        return _dump({"job_id": job.id, "state": job.state, "workflow_id": job.workflow_id,
                      "created_at": job.created_at})

    def start_job(args, ctx):
        job = engine.start_job(args["job_id"])
        return _dump({"job_id": job.id, "state": job.state, "started_at": job.started_at,
                      "assigned_actor_ids": job.assigned_actor_ids})

    def query_job_status(args, ctx):
        return _dump(engine.query_job_status(args["job_id"]))

    def query_jobs(args, ctx):
        jobs = engine.query_jobs(
            lab_id=args.get("lab_id"), workflow_id=args.get("workflow_id"),
            state=args.get("state"), created_after=args.get("created_after"),
            created_before=args.get("created_before"), limit=args.get("limit"),
        )
        return _dump({"count": len(jobs), "jobs": [
            {"job_id": j.id, "workflow_id": j.workflow_id, "state": j.state,
             "created_at": j.created_at} for j in jobs
        ]})

    def get_lab(args, ctx):
        lab = world.get("lab", args["lab_id"])
        return _dump({"lab_id": lab.id, "name": lab.name, "site": lab.site, "status": lab.status,
                      "actor_ids": lab.actor_ids, "workflow_ids": lab.workflow_ids})

    def list_labs(args, ctx):
        labs = [{"lab_id": l.id, "name": l.name, "status": l.status}
                for l in sorted(world.labs.values(), key=lambda x: x.id)]
        return _dump({"count": len(labs), "labs": labs})

    def list_actors(args, ctx):
        actors = sorted(world.actors.values(), key=lambda x: x.id)
        if args.get("lab_id"):
            actors = [a for a in actors if a.lab_id == args["lab_id"]]
        return _dump({"count": len(actors), "actors": [
            {"actor_id": a.id, "name": a.name, "kind": a.kind, "status": a.status,
             "capabilities": a.capabilities, "lab_id": a.lab_id} for a in actors
        ]})

    def list_workflows_in_lab(args, ctx):
        world.get("lab", args["lab_id"])
        workflows = [w for w in sorted(world.workflows.values(), key=lambda x: x.id)
                     if w.lab_id == args["lab_id"]]
        return _dump({"count": len(workflows), "workflows": [
            {"workflow_id": w.id, "name": w.name, "result_kind": w.result_kind,
             "flags": sorted(w.flags), "nominal_duration_s": w.nominal_duration_s}
            for w in workflows
        ]})

    def get_workflow_parameter_schema(args, ctx):
        workflow = world.get("workflow", args["workflow_id"])
        return _dump({"workflow_id": workflow.id,
                      "parameter_schema": workflow.parameter_schema.to_dict()})

    def get_workflow_duration(args, ctx):
        return _dump(engine.get_workflow_duration(args["workflow_id"]).to_dict())

    def user_info(args, ctx):
        user = world.get("user", args.get("user_id") or ctx.user_id)
        return _dump({"user_id": user.id, "name": user.name, "role": user.role,
                      "permissions": sorted(user.permissions)})

    def fuzzy_actor(args, ctx):
        return _dump(fuzzy_lookup_actor(world, args["query"]).to_dict())

    def fuzzy_lab(args, ctx):
        return _dump(fuzzy_lookup_lab(world, args["query"]).to_dict())

    def attach_pdf(args, ctx):
        doc_id = attach_pdf_of_markdown(world, args["job_id"], args.get("title", "Report"),
                                        args["markdown_text"])
        return _dump({"document_id": doc_id, "job_id": args["job_id"],
                      "mime": "application/pdf"})

    return [
        (desc("attach_pdf_of_markdown", "Render markdown to PDF and attach it to a job.",
              {"job_id": s("string", required=True),
               "title": s("string"),
               "markdown_text": s("string", required=True)}), attach_pdf),
        (ToolDescriptor(
            name="create_job",
            description="Create a laboratory job; 'parameters' is an object validated "
                        "against the workflow's parameter schema.",
            input_schema=ParameterSchema({"workflow_id": s("string", required=True)}, allow_extra=True),
            category=rosters.TOOL_CATEGORIES["create_job"],
        ), create_job),
        (desc("fuzzy_lookup_actor", "Find the most likely actor from a non-exact name.",
              {"query": s("string", required=True)}), fuzzy_actor),
        (desc("fuzzy_lookup_lab", "Find the most likely lab from a non-exact name.",
              {"query": s("string", required=True)}), fuzzy_lab),
        (desc("get_lab", "Detailed laboratory information and status.",
              {"lab_id": s("string", required=True)}), get_lab),
        (desc("get_workflow_duration", "Duration statistics over completed jobs.",
              {"workflow_id": s("string", required=True)}), get_workflow_duration),
        (desc("get_workflow_parameter_schema", "Parameter schema for building valid job parameters.",
              {"workflow_id": s("string", required=True)}), get_workflow_parameter_schema),
        (desc("list_actors", "List workflow-associated actors (equipment or humans).",
              {"lab_id": s("string")}), list_actors),
        (desc("list_labs", "Catalog available laboratory facilities.", {}), list_labs),
        (desc("list_workflows_in_lab", "Available experimental procedures in one lab.",
              {"lab_id": s("string", required=True)}), list_workflows_in_lab),
        (desc("query_jobs", "Search and filter job records (strict created_after/before).",
              {"lab_id": s("string"), "workflow_id": s("string"), "state": s("string"),
               "created_after": s("number"), "created_before": s("number"),
               "limit": s("integer", minimum=1)}), query_jobs),
        (desc("query_job_status", "Job progress, timestamps, and result.",
              {"job_id": s("string", required=True)}), query_job_status),
        (desc("start_job", "Queue a created job for execution.",
              {"job_id": s("string", required=True)}, requires_approval=True), start_job),
        (desc("user_info", "Operator credentials and permissions.",
              {"user_id": s("string")}), user_info),
    ]


def call_needs_approval(world: World, engine: JobEngine, tool_name: str, arguments: dict) -> bool:
    """True when this exact call must suspend for human approval."""
    if tool_name != "start_job":
        return False
    job_id = arguments.get("job_id")
    if not job_id or job_id not in world.jobs:
        return False
    return engine.needs_approval(job_id)
