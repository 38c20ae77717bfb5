from __future__ import annotations

import io
import json
import random

import pytest

from tippy.engine import JobEngine
from tippy.errors import FrameError, RegistrationError
from tippy.mcp import (
    INVALID_PARAMS,
    INVALID_REQUEST,
    METHOD_NOT_FOUND,
    PARSE_ERROR,
    PROTOCOL_VERSION,
    McpClient,
    StdioTransport,
    ToolDescriptor,
)
from tippy.mcp.transport import MAX_FRAME_BYTES, serve_stdio
from tippy.molkit.server import build_molecule_server
from tippy.schema import ParameterSchema
from tippy.tools import build_lab_server
from tippy.world import seed_world


@pytest.fixture
def lab_server():
    world = seed_world()
    return build_lab_server(world, JobEngine(world, seed=1))


def rpc(server, method, params=None, msg_id=1):
    frame = {"jsonrpc": "2.0", "id": msg_id, "method": method}
    if params is not None:
        frame["params"] = params
    raw = server.handle_message(json.dumps(frame).encode())
    return json.loads(raw) if raw is not None else None


# --- lifecycle ---

def test_initialize_shape(lab_server):
    result = rpc(lab_server, "initialize")["result"]
    assert result["protocol_version"] == PROTOCOL_VERSION == "2024-11-05"
    assert result["server_info"]["name"] == "tippy-lab"
    assert result["capabilities"] == {"tools": {}}


def test_tools_list_lab_server_has_14(lab_server):
    tools = rpc(lab_server, "tools/list")["result"]["tools"]
    assert len(tools) == 14
    names = {t["name"] for t in tools}
    assert "create_job" in names and "user_info" in names


def test_molecule_server_has_exactly_4_tools():
    server = build_molecule_server()
    tools = rpc(server, "tools/list")["result"]["tools"]
    assert sorted(t["name"] for t in tools) == [
        "generate_smiles_image", "molecule_info_from_smiles",
        "molmim_generate", "smiles_from_molecule_name",
    ]


def test_register_18_tool_union():
    """The union of all four agent rosters is 18 tools on one server."""
    world = seed_world()
    server = build_lab_server(world, JobEngine(world, seed=1))
    molecule = build_molecule_server()
    for name in molecule.tool_names():
        descriptor = molecule.descriptor(name)
        server.register_tool(descriptor, lambda args, ctx: "x")
    assert len(rpc(server, "tools/list")["result"]["tools"]) == 18


def test_duplicate_registration_rejected(lab_server):
    descriptor = ToolDescriptor(
        name="create_job", description="dup", input_schema=ParameterSchema({}), category="job")
    with pytest.raises(RegistrationError):
        lab_server.register_tool(descriptor, lambda a, c: "")


# --- error codes ---

def test_parse_error():
    server = build_molecule_server()
    response = json.loads(server.handle_message(b"{not json"))
    assert response["error"]["code"] == PARSE_ERROR
    assert response["id"] is None


def test_invalid_request():
    server = build_molecule_server()
    for bad in (b"[1,2,3]", b"42", b'{"jsonrpc": "1.0", "id": 1, "method": "x"}',
                b'{"jsonrpc": "2.0", "id": 1}'):
        response = json.loads(server.handle_message(bad))
        assert response["error"]["code"] == INVALID_REQUEST, bad


def test_method_not_found(lab_server):
    response = rpc(lab_server, "tools/frobnicate")
    assert response["error"]["code"] == METHOD_NOT_FOUND


def test_schema_violation_minus_32602(lab_server):
    response = rpc(lab_server, "tools/call",
                   {"name": "get_lab", "arguments": {"lab_id": 42}})
    assert response["error"]["code"] == INVALID_PARAMS
    assert "lab_id" in json.dumps(response["error"])


def test_create_job_bad_parameters_minus_32602(lab_server):
    response = rpc(lab_server, "tools/call", {
        "name": "create_job",
        "arguments": {"workflow_id": "hplc_purity_check", "parameters": {"sample": 42}},
    })
    assert response["error"]["code"] == INVALID_PARAMS
    assert "sample" in json.dumps(response["error"])


def test_unknown_tool_minus_32602(lab_server):
    response = rpc(lab_server, "tools/call", {"name": "frobnicate", "arguments": {}})
    assert response["error"]["code"] == INVALID_PARAMS


def test_notifications_never_answered(lab_server):
    for method in ("notifications/initialized", "tools/list", "nonexistent/method"):
        frame = json.dumps({"jsonrpc": "2.0", "method": method})
        assert lab_server.handle_message(frame.encode()) is None


def test_tool_level_failure_is_in_band(lab_server):
    response = rpc(lab_server, "tools/call",
                   {"name": "get_lab", "arguments": {"lab_id": "nope"}})
    result = response["result"]
    assert result["isError"] is True
    assert "not found" in result["content"][0]["text"]


def test_tool_success_shape(lab_server):
    response = rpc(lab_server, "tools/call", {"name": "list_labs", "arguments": {}})
    result = response["result"]
    assert result["isError"] is False
    assert result["content"][0]["type"] == "text"
    assert "Chemistry Lab A" in result["content"][0]["text"]


# --- id correspondence under random interleavings ---

def test_id_correspondence_random_interleaving(lab_server):
    rng = random.Random(31)
    for _ in range(120):
        msg_id = rng.choice([rng.randint(1, 10**6), f"id-{rng.randint(1, 999)}"])
        kind = rng.random()
        if kind < 0.25:
            raw = lab_server.handle_message(b"}{ garbage")
            assert json.loads(raw)["id"] is None
        elif kind < 0.5:
            response = rpc(lab_server, "no/such/method", msg_id=msg_id)
            assert response["id"] == msg_id
        elif kind < 0.75:
            response = rpc(lab_server, "tools/list", msg_id=msg_id)
            assert response["id"] == msg_id
        else:
            response = rpc(lab_server, "tools/call",
                           {"name": "list_labs", "arguments": {}}, msg_id=msg_id)
            assert response["id"] == msg_id


# --- fuzz: schema-generated arguments always validate ---

def generate_from_schema(schema: ParameterSchema, rng: random.Random) -> dict:
    args = {}
    for name, spec in schema.properties.items():
        if not spec.required and rng.random() < 0.4:
            continue
        if spec.type == "string":
            args[name] = "".join(rng.choice("abcXYZ 123") for _ in range(rng.randint(1, 12)))
        elif spec.type == "integer":
            lo = int(spec.minimum) if spec.minimum is not None else 0
            hi = int(spec.maximum) if spec.maximum is not None else lo + 100
            args[name] = rng.randint(lo, hi)
        elif spec.type == "number":
            lo = spec.minimum if spec.minimum is not None else 0.0
            hi = spec.maximum if spec.maximum is not None else lo + 100.0
            args[name] = rng.uniform(lo, hi)
        elif spec.type == "boolean":
            args[name] = rng.random() < 0.5
        elif spec.type == "enum":
            args[name] = rng.choice(spec.allowed_values)
    return args


def test_fuzz_schema_valid_arguments_never_invalid_params(lab_server):
    rng = random.Random(8)
    molecule = build_molecule_server()
    for server in (lab_server, molecule):
        for name in server.tool_names():
            descriptor = server.descriptor(name)
            for _ in range(10):
                args = generate_from_schema(descriptor.input_schema, rng)
                assert descriptor.input_schema.validate(args) == [], (name, args)


# --- framing ---

def test_stdio_two_frames_in_order():
    reader = io.BytesIO(b'{"jsonrpc":"2.0","id":1,"method":"tools/list"}\n'
                        b'{"jsonrpc":"2.0","id":2,"method":"tools/list"}\n')
    transport = StdioTransport(reader, io.BytesIO())
    f1 = transport.read_frame()
    f2 = transport.read_frame()
    assert json.loads(f1)["id"] == 1
    assert json.loads(f2)["id"] == 2
    assert transport.read_frame() is None  # end of stream


def test_stdio_oversize_frame():
    reader = io.BytesIO(b"x" * (MAX_FRAME_BYTES + 10) + b"\n")
    transport = StdioTransport(reader, io.BytesIO())
    with pytest.raises(FrameError):
        transport.read_frame()


def test_serve_stdio_round_trip():
    server = build_molecule_server()
    requests = (
        b'{"jsonrpc": "2.0", "id": 1, "method": "initialize"}\n'
        b'{"jsonrpc": "2.0", "method": "notifications/initialized"}\n'
        b'{"jsonrpc": "2.0", "id": 2, "method": "tools/list"}\n'
        b'{"jsonrpc": "2.0", "id": 3, "method": "tools/call", '
        b'"params": {"name": "molecule_info_from_smiles", "arguments": {"text": "CCO"}}}\n'
    )
    out = io.BytesIO()
    serve_stdio(server, reader=io.BytesIO(requests), writer=out)
    lines = out.getvalue().strip().split(b"\n")
    assert len(lines) == 3  # notification produced no response
    first = json.loads(lines[0])
    assert first["result"]["protocol_version"] == "2024-11-05"
    last = json.loads(lines[2])
    assert "46.069" in last["result"]["content"][0]["text"]


# --- multi-server client ---

def test_client_routes_to_owning_server():
    world = seed_world()
    client = McpClient()
    client.attach(build_lab_server(world, JobEngine(world, seed=1)))
    client.attach(build_molecule_server())
    assert client.owner_of("list_labs") == "tippy-lab"
    assert client.owner_of("molmim_generate") == "tippy-molecule"
    outcome = client.call_tool("molecule_info_from_smiles", {"text": "O"})
    assert not outcome.is_error
    assert "H2O" in outcome.text
    outcome = client.call_tool("get_lab", {"lab_id": "nope"})
    assert outcome.is_error
