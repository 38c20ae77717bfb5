"""Tippy: a supervisor-coordinated multi-agent system operating a simulated
drug-discovery laboratory through MCP tool servers."""

__version__ = "0.1.0"
