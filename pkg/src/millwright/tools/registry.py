"""Tool specs, argument validation with repair coercions, and the registry.

The manifest file is the single source of truth for tool names, categories,
parameter schemas, and output patterns; the evaluation harness and scripted
backends read the same file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from millwright.errors import ToolError

PARAM_TYPES = ("string", "int", "number", "part_range", "string_list", "path")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str
    required: bool = False

    def __post_init__(self) -> None:
        if self.type not in PARAM_TYPES:
            raise ToolError(f"unknown param type {self.type!r} for {self.name}")


@dataclass(frozen=True)
class OutputSpec:
    name: str
    unit: str


@dataclass(frozen=True)
class ToolSpec:
    name: str
    category: str
    params: tuple[ParamSpec, ...]
    outputs: tuple[OutputSpec, ...]

    def param(self, name: str) -> ParamSpec | None:
        for p in self.params:
            if p.name == name:
                return p
        return None


def coerce_value(spec: ParamSpec, value: Any) -> Any:
    """Repair-coerce one argument: numeric strings become ints, ranges become
    (lo, hi) int pairs, paths normalize. Raises ToolError when unrepairable."""
    kind = spec.type
    if kind == "string":
        if isinstance(value, str):
            return value
        raise ToolError(f"{spec.name}: expected string, got {type(value).__name__}")
    if kind == "path":
        if isinstance(value, str):
            return str(Path(value))
        raise ToolError(f"{spec.name}: expected path string")
    if kind == "int":
        if isinstance(value, bool):
            raise ToolError(f"{spec.name}: expected int, got bool")
        if isinstance(value, int):
            return value
        if isinstance(value, str) and value.strip().lstrip("-").isdigit():
            return int(value.strip())
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ToolError(f"{spec.name}: cannot coerce {value!r} to int")
    if kind == "number":
        if isinstance(value, bool):
            raise ToolError(f"{spec.name}: expected number, got bool")
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value.strip())
            except ValueError:
                raise ToolError(f"{spec.name}: cannot coerce {value!r} to number") from None
        raise ToolError(f"{spec.name}: cannot coerce {value!r} to number")
    if kind == "part_range":
        if isinstance(value, (list, tuple)) and len(value) == 2:
            lo = coerce_value(ParamSpec(spec.name, "int"), value[0])
            hi = coerce_value(ParamSpec(spec.name, "int"), value[1])
            if lo > hi:
                raise ToolError(f"{spec.name}: range start {lo} exceeds end {hi}")
            return (lo, hi)
        raise ToolError(f"{spec.name}: expected [start, end] pair, got {value!r}")
    if kind == "string_list":
        if isinstance(value, str):
            return [value]
        if isinstance(value, (list, tuple)) and all(isinstance(v, str) for v in value):
            return list(value)
        raise ToolError(f"{spec.name}: expected list of strings")
    raise ToolError(f"{spec.name}: unhandled type {kind}")


class ToolRegistry:
    def __init__(self) -> None:
        self._specs: dict[str, ToolSpec] = {}
        self._impls: dict[str, Callable] = {}

    def register(self, spec: ToolSpec, impl: Callable) -> None:
        if spec.name in self._specs:
            raise ToolError(f"duplicate tool name {spec.name}")
        self._specs[spec.name] = spec
        self._impls[spec.name] = impl

    def __contains__(self, name: str) -> bool:
        return name in self._specs

    def names(self) -> list[str]:
        return sorted(self._specs)

    def spec(self, name: str) -> ToolSpec:
        if name not in self._specs:
            raise ToolError(f"unknown tool {name!r}")
        return self._specs[name]

    def impl(self, name: str) -> Callable:
        self.spec(name)
        return self._impls[name]

    def categories(self) -> set[str]:
        return {spec.category for spec in self._specs.values()}

    def by_category(self, category: str) -> list[str]:
        return sorted(n for n, s in self._specs.items() if s.category == category)

    def validate_args(self, name: str, args: dict[str, Any]) -> dict[str, Any]:
        """Validate and coerce args against the tool schema.

        Unknown argument names and missing required arguments are errors;
        values run through the repair coercions.
        """
        spec = self.spec(name)
        known = {p.name for p in spec.params}
        problems = [f"unknown argument {k!r}" for k in args if k not in known]
        coerced: dict[str, Any] = {}
        for p in spec.params:
            if p.name in args:
                try:
                    coerced[p.name] = coerce_value(p, args[p.name])
                except ToolError as exc:
                    problems.append(str(exc))
            elif p.required:
                problems.append(f"missing required argument {p.name!r}")
        if problems:
            raise ToolError(f"{name}: " + "; ".join(problems))
        return coerced


def load_manifest(path: str | Path | None = None) -> list[ToolSpec]:
    if path is None:
        raw = json.loads(
            resources.files("millwright.tools").joinpath("manifest.json").read_text())
    else:
        raw = json.loads(Path(path).read_text())
    specs = []
    for entry in raw:
        specs.append(ToolSpec(
            name=entry["name"],
            category=entry["category"],
            params=tuple(ParamSpec(p["name"], p["type"], bool(p.get("required", False)))
                         for p in entry.get("params", [])),
            outputs=tuple(OutputSpec(o["name"], o.get("unit", ""))
                          for o in entry.get("outputs", [])),
        ))
    return specs
