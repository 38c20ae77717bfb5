"""The standalone molecule MCP server: exactly the four molecule tools."""

from __future__ import annotations

import json

from ..mcp.server import McpServer, ToolDescriptor
from ..schema import ParameterSchema, ParamSpec
from .generate import ScoreSpec, molmim_generate
from .names import smiles_from_molecule_name
from .properties import molecule_info_from_smiles
from .svg import generate_smiles_image


def build_molecule_server(name: str = "tippy-molecule") -> McpServer:
    server = McpServer(name=name)
    s = ParamSpec

    def image(args, ctx):
        return generate_smiles_image(args["text"], args.get("width_px", 400), args.get("height_px", 300))

    def info(args, ctx):
        return json.dumps(molecule_info_from_smiles(args["text"]).to_dict(), sort_keys=True)

    def generate(args, ctx):
        spec = ScoreSpec(
            property=args["property"],
            mode=args["mode"],
            target_value=args.get("target_value"),
        )
        results = molmim_generate(
            args["seed_smiles"], spec,
            n_iterations=args.get("n_iterations", 200),
            seed=args.get("seed", 0),
            top_k=args.get("top_k", 5),
        )
        return json.dumps({"results": results}, sort_keys=True)

    def from_name(args, ctx):
        return json.dumps(smiles_from_molecule_name(args["name"]), sort_keys=True)

    server.register_tool(ToolDescriptor(
        name="generate_smiles_image",
        description="Render a molecular structure as SVG.",
        input_schema=ParameterSchema({
            "text": s("string", required=True, description="SMILES"),
            "width_px": s("integer", minimum=64, maximum=4096),
            "height_px": s("integer", minimum=64, maximum=4096),
        }),
        category="actor_asset",
    ), image)
    server.register_tool(ToolDescriptor(
        name="molecule_info_from_smiles",
        description="Formula, mass, rings, H-bond counts, and estimated logP from SMILES.",
        input_schema=ParameterSchema({"text": s("string", required=True)}),
        category="actor_asset",
    ), info)
    server.register_tool(ToolDescriptor(
        name="molmim_generate",
        description="Property-guided molecule generation by seeded hill climbing.",
        input_schema=ParameterSchema({
            "seed_smiles": s("string", required=True),
            "property": s("enum", required=True, allowed_values=["mw", "logp_est", "rings", "hbd", "hba"]),
            "mode": s("enum", required=True, allowed_values=["maximize", "minimize", "target"]),
            "target_value": s("number"),
            "n_iterations": s("integer", minimum=1),
            "seed": s("integer"),
            "top_k": s("integer", minimum=1),
        }),
        category="actor_asset",
    ), generate)
    server.register_tool(ToolDescriptor(
        name="smiles_from_molecule_name",
        description="Convert a chemical name to SMILES via the bundled table.",
        input_schema=ParameterSchema({"name": s("string", required=True)}),
        category="actor_asset",
    ), from_name)
    return server
