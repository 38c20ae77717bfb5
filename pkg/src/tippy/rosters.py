"""Per-agent tool rosters and the registered tool-name universe.

Kept free of other imports so entity validation (user permissions) can use it
without pulling in the tool implementations.
"""

from __future__ import annotations

LAB_TOOLS = (
    "attach_pdf_of_markdown",
    "create_job",
    "fuzzy_lookup_actor",
    "fuzzy_lookup_lab",
    "get_lab",
    "get_workflow_duration",
    "get_workflow_parameter_schema",
    "list_actors",
    "list_labs",
    "list_workflows_in_lab",
    "query_jobs",
    "query_job_status",
    "start_job",
    "user_info",
)

ANALYSIS_TOOLS = (
    "attach_pdf_of_markdown",
    "fuzzy_lookup_actor",
    "fuzzy_lookup_lab",
    "get_lab",
    "get_workflow_duration",
    "list_actors",
    "list_labs",
    "query_jobs",
    "query_job_status",
    "user_info",
)

REPORT_TOOLS = (
    "attach_pdf_of_markdown",
    "fuzzy_lookup_lab",
    "get_lab",
    "get_workflow_duration",
    "list_labs",
    "query_jobs",
    "query_job_status",
    "user_info",
)

MOLECULE_TOOLS = (
    "generate_smiles_image",
    "molecule_info_from_smiles",
    "molmim_generate",
    "smiles_from_molecule_name",
)

AGENT_TOOLSETS = {
    "molecule": MOLECULE_TOOLS,
    "lab": LAB_TOOLS,
    "analysis": ANALYSIS_TOOLS,
    "report": REPORT_TOOLS,
}

# 14 lab-side + 4 molecule tools
ALL_TOOL_NAMES = tuple(sorted(set(LAB_TOOLS) | set(MOLECULE_TOOLS)))

TOOL_CATEGORIES = {
    "create_job": "job",
    "start_job": "job",
    "query_jobs": "job",
    "query_job_status": "job",
    "get_lab": "lab",
    "list_labs": "lab",
    "attach_pdf_of_markdown": "document",
    "get_workflow_duration": "workflow",
    "get_workflow_parameter_schema": "workflow",
    "list_workflows_in_lab": "workflow",
    "list_actors": "actor_asset",
    "fuzzy_lookup_actor": "actor_asset",
    "fuzzy_lookup_lab": "actor_asset",
    "user_info": "actor_asset",
    # molecule tools live on their own server and carry actor_asset
    "generate_smiles_image": "actor_asset",
    "molecule_info_from_smiles": "actor_asset",
    "molmim_generate": "actor_asset",
    "smiles_from_molecule_name": "actor_asset",
}
