"""Command line entry points: `tippy serve` and `tippy mcp-serve`."""

from __future__ import annotations

import argparse
import sys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tippy",
                                     description="Simulated drug-discovery lab agent platform")
    sub = parser.add_subparsers(dest="command", required=True)

    serve_cmd = sub.add_parser("serve", help="run the HTTP gateway")
    serve_cmd.add_argument("--listen", default=None, help="host:port (default TIPPY_HTTP_ADDR)")
    serve_cmd.add_argument("--data-dir", default=None)
    serve_cmd.add_argument("--config-dir", default=None)
    serve_cmd.add_argument("--seed", type=int, default=None)

    mcp_cmd = sub.add_parser("mcp-serve", help="run an MCP tool server")
    mcp_cmd.add_argument("--transport", choices=["stdio", "http"], default="stdio")
    mcp_cmd.add_argument("--listen", default=None, help="host:port for the http transport")
    mcp_cmd.add_argument("--server", choices=["lab", "molecule"], default="lab")
    mcp_cmd.add_argument("--data-dir", default=None)
    mcp_cmd.add_argument("--config-dir", default=None)
    mcp_cmd.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)

    if args.command == "serve":
        from .app import build_app
        from .gateway import serve
        app = build_app(data_dir=args.data_dir, config_dir=args.config_dir, seed=args.seed)
        serve(app, listen=args.listen)
        return 0

    if args.command == "mcp-serve":
        if args.server == "molecule":
            from .molkit.server import build_molecule_server
            server = build_molecule_server()
            app = None
        else:
            from .app import build_app
            app = build_app(data_dir=args.data_dir, config_dir=args.config_dir, seed=args.seed)
            server = app.lab_server
        if args.transport == "stdio":
            from .mcp.transport import serve_stdio
            serve_stdio(server)
            return 0
        from .gateway import serve
        if app is None:
            print("http transport serves the lab server mount; use --server lab", file=sys.stderr)
            return 2
        serve(app, listen=args.listen)
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
