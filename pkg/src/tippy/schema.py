"""Parameter schemas: the typed property maps that gate job parameters and tool arguments."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError

PARAM_TYPES = ("string", "number", "integer", "boolean", "enum")


@dataclass
class ParamSpec:
    type: str
    required: bool = False
    allowed_values: list | None = None
    minimum: float | None = None
    maximum: float | None = None
    description: str = ""

    def check(self) -> None:
        if self.type not in PARAM_TYPES:
            raise ValidationError(f"unknown parameter type {self.type!r}", ["type"])
        if self.allowed_values is not None and self.type != "enum":
            raise ValidationError("allowed_values only valid with type=enum", ["allowed_values"])
        if self.type == "enum" and not self.allowed_values:
            raise ValidationError("enum type needs allowed_values", ["allowed_values"])
        if self.minimum is not None and self.maximum is not None and self.minimum > self.maximum:
            raise ValidationError("minimum exceeds maximum", ["minimum", "maximum"])

    def to_dict(self) -> dict:
        out: dict = {"type": self.type, "required": self.required}
        if self.allowed_values is not None:
            out["allowed_values"] = self.allowed_values
        if self.minimum is not None:
            out["minimum"] = self.minimum
        if self.maximum is not None:
            out["maximum"] = self.maximum
        if self.description:
            out["description"] = self.description
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ParamSpec":
        spec = cls(
            type=raw.get("type", ""),
            required=bool(raw.get("required", False)),
            allowed_values=raw.get("allowed_values"),
            minimum=raw.get("minimum"),
            maximum=raw.get("maximum"),
            description=raw.get("description", ""),
        )
        spec.check()
        return spec


@dataclass
class ParameterSchema:
    properties: dict[str, ParamSpec] = field(default_factory=dict)
    allow_extra: bool = False  # tool descriptors use this for nested passthrough args

    def check(self) -> None:
        for spec in self.properties.values():
            spec.check()

    def validate(self, params: dict) -> list[str]:
        """Return human-readable problems, one per offending field; empty means valid."""
        problems = []
        if not isinstance(params, dict):
            return ["parameters must be an object"]
        for name, spec in sorted(self.properties.items()):
            if name not in params:
                if spec.required:
                    problems.append(f"{name}: required")
                continue
            value = params[name]
            problems.extend(f"{name}: {msg}" for msg in _check_value(spec, value))
        if not self.allow_extra:
            for name in sorted(params):
                if name not in self.properties:
                    problems.append(f"{name}: unknown parameter")
        return problems

    def require_valid(self, params: dict) -> None:
        problems = self.validate(params)
        if problems:
            raise ValidationError(
                "invalid parameters: " + "; ".join(problems),
                [p.split(":", 1)[0] for p in problems],
            )

    def to_dict(self) -> dict:
        out: dict = {"properties": {name: spec.to_dict() for name, spec in sorted(self.properties.items())}}
        if self.allow_extra:
            out["allow_extra"] = True
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ParameterSchema":
        props = raw.get("properties", {})
        if not isinstance(props, dict):
            raise ValidationError("properties must be a map", ["properties"])
        return cls(
            {name: ParamSpec.from_dict(spec) for name, spec in props.items()},
            allow_extra=bool(raw.get("allow_extra", False)),
        )


def _check_value(spec: ParamSpec, value) -> list[str]:
    t = spec.type
    if t == "string":
        if not isinstance(value, str):
            return ["expected string"]
    elif t == "boolean":
        if not isinstance(value, bool):
            return ["expected boolean"]
    elif t == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            return ["expected integer"]
    elif t == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return ["expected number"]
    elif t == "enum":
        if value not in (spec.allowed_values or []):
            return [f"not one of {spec.allowed_values}"]
    problems = []
    if t in ("number", "integer") and isinstance(value, (int, float)) and not isinstance(value, bool):
        if spec.minimum is not None and value < spec.minimum:
            problems.append(f"below minimum {spec.minimum}")
        if spec.maximum is not None and value > spec.maximum:
            problems.append(f"above maximum {spec.maximum}")
    return problems
