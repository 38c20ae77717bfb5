"""Agent profiles: instructions, tool subsets, and the handoff graph.

The supervisor routes and summarizes but calls no tools; specialists hand
control back to the supervisor only (no specialist-to-specialist edges).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .. import rosters
from ..errors import ValidationError

AGENT_NAMES = ("supervisor", "molecule", "lab", "analysis", "report")
SPECIALISTS = ("molecule", "lab", "analysis", "report")


@dataclass
class AgentProfile:
    name: str
    instructions: str
    tool_names: tuple[str, ...]
    handoff_targets: tuple[str, ...]

    def check(self) -> None:
        if self.name not in AGENT_NAMES:
            raise ValidationError(f"unknown agent {self.name!r}")
        for target in self.handoff_targets:
            if target not in AGENT_NAMES:
                raise ValidationError(f"unknown handoff target {target!r}")
            if self.name != "supervisor" and target != "supervisor":
                raise ValidationError("specialist-to-specialist handoffs are forbidden")


def load_profiles(config_dir: Path | str) -> dict[str, AgentProfile]:
    root = Path(config_dir) / "instructions"
    profiles = {}
    for name in AGENT_NAMES:
        path = root / f"{name}.md"
        instructions = path.read_text(encoding="utf-8") if path.exists() else f"You are the {name} agent."
        if name == "supervisor":
            tool_names: tuple[str, ...] = ()
            handoffs = SPECIALISTS
        else:
            tool_names = rosters.AGENT_TOOLSETS[name]
            handoffs = ("supervisor",)
        profile = AgentProfile(name=name, instructions=instructions.strip(),
                               tool_names=tool_names, handoff_targets=handoffs)
        profile.check()
        profiles[name] = profile
    return profiles
