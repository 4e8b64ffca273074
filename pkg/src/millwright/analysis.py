"""Analysis agent: plan a finite tool-call sequence, execute it
deterministically, and assemble a tools-only result with full provenance.

The backend proposes plans; every proposal is validated against the tool
registry, repaired by argument coercion where possible, or dropped. When
the backend yields nothing usable a deterministic keyword planner takes
over, so planning is total for supported instructions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from millwright import parsing
from millwright.errors import BackendFailure, ResourceMissing, ToolError
from millwright.gateway import Backend
from millwright.session import ProvenanceMap, digest_of
from millwright.tools.impl import ToolContext
from millwright.tools.registry import ToolRegistry

MAX_SEQUENCE_LENGTH = 16


@dataclass
class ToolCall:
    index: int
    tool_name: str
    args: dict[str, Any] = field(default_factory=dict)
    depends_on: list[int] = field(default_factory=list)


@dataclass
class ToolOutput:
    call_index: int
    fields: dict[str, Any]

    @property
    def output_id(self) -> str:
        return f"call-{self.call_index}"

    def field_ids(self) -> list[str]:
        return [f"call-{self.call_index}.{name}" for name in self.fields]


@dataclass
class AnalysisResult:
    calls: list[ToolCall]
    outputs: list[ToolOutput]
    provenance: ProvenanceMap
    narrative: str
    error: tuple[int, str] | None = None

    def quantities(self) -> dict[str, Any]:
        """Reported numeric/vector quantities keyed by quantity id."""
        report: dict[str, Any] = {}
        for output in self.outputs:
            for name, value in output.fields.items():
                if _is_quantity(value):
                    report[name] = value
        return report

    def output_field_ids(self) -> set[str]:
        ids: set[str] = set()
        for output in self.outputs:
            ids.update(output.field_ids())
        return ids


@dataclass
class PlanResult:
    calls: list[ToolCall]
    repairs: list[str] = field(default_factory=list)
    diagnostic: str | None = None
    origin: str = "backend"


def _is_quantity(value: Any) -> bool:
    if isinstance(value, bool):
        return False
    if isinstance(value, (int, float)):
        return True
    if isinstance(value, list):
        return all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    return False


# -- planning -----------------------------------------------------------------

PLANNER_PROMPT = """Plan tool calls for this instruction.
Instruction: {instruction}
Available tools: {tools}
Respond with a JSON array of objects: {{"tool": name, "args": {{...}}, "depends_on": [indices]}}.
"""


def plan_calls(instruction: str, ctx: ToolContext, backend: Backend,
               registry: ToolRegistry) -> PlanResult:
    """Backend-proposed plan, validated and repaired; keyword fallback."""
    if not registry.names():
        raise ToolError("tool registry is empty")
    proposal: list[dict] | None = None
    try:
        raw = backend.complete("analysis-planner",
                               PLANNER_PROMPT.format(instruction=instruction,
                                                     tools=", ".join(registry.names())))
        parsed = json.loads(raw)
        if isinstance(parsed, list):
            proposal = parsed
    except (BackendFailure, json.JSONDecodeError):
        proposal = None

    repairs: list[str] = []
    if proposal is not None:
        calls = _validate_proposal(proposal, registry, repairs)
        if calls:
            return PlanResult(calls=calls[:MAX_SEQUENCE_LENGTH], repairs=repairs,
                              origin="backend")
        repairs.append("backend proposal unusable, using keyword planner")
    return _keyword_plan(instruction, ctx, registry, repairs)


def _validate_proposal(proposal: list[dict], registry: ToolRegistry,
                       repairs: list[str]) -> list[ToolCall]:
    calls: list[ToolCall] = []
    for entry in proposal:
        name = entry.get("tool") if isinstance(entry, dict) else None
        if not isinstance(name, str) or name not in registry:
            repairs.append(f"dropped call with unknown tool {name!r}")
            continue
        raw_args = entry.get("args") or {}
        if not isinstance(raw_args, dict):
            repairs.append(f"dropped {name}: args not an object")
            continue
        try:
            args = registry.validate_args(name, raw_args)
        except ToolError as exc:
            repairs.append(f"dropped {name}: {exc}")
            continue
        index = len(calls) + 1
        depends = [d for d in entry.get("depends_on", [])
                   if isinstance(d, int) and 1 <= d < index]
        if depends != entry.get("depends_on", []) and entry.get("depends_on"):
            repairs.append(f"repaired {name}: clamped dependencies to earlier calls")
        calls.append(ToolCall(index=index, tool_name=name, args=args, depends_on=depends))
    return calls


def _keyword_plan(instruction: str, ctx: ToolContext, registry: ToolRegistry,
                  repairs: list[str]) -> PlanResult:
    """Deterministic chain construction mirroring the reference scripts."""
    metrics = parsing.requested_metrics(instruction)
    parts = parsing.extract_part_range(instruction)
    pair_keys = [k for k in parsing.extract_pair_keys(instruction)]
    calls: list[ToolCall] = []

    def add(tool: str, args: dict, depends: list[int]) -> int:
        index = len(calls) + 1
        calls.append(ToolCall(index=index, tool_name=tool,
                              args=registry.validate_args(tool, args),
                              depends_on=depends))
        return index

    needs_pairs = any(tool != "rb_compute_pathing_dev" for _, tool in metrics) or not metrics
    pairs_index = 0
    if needs_pairs:
        if ctx.slot("pairing") is None:
            try:
                ctx.resource("inspection-csv")
            except (ResourceMissing, ToolError) as exc:
                return PlanResult(calls=[], repairs=repairs, diagnostic=str(exc),
                                  origin="fallback")
            pairs_index = add("compute_inspection_pairs", {}, [])

    has_pathing = True
    if ctx.slot("pathing") is None:
        try:
            ctx.resource("pathing-field")
        except (ResourceMissing, ToolError):
            has_pathing = False

    scope_args: dict[str, Any] = {}
    if parts:
        scope_args["parts"] = list(parts)
    if pair_keys:
        scope_args["pair_keys"] = pair_keys

    pathing_index = 0
    wants_pathing = any(tool in ("rb_compute_pair_tool_comp",
                                 "rb_compute_attribution_fractions",
                                 "rb_compute_pathing_dev")
                        for _, tool in metrics)
    if has_pathing and wants_pathing and ctx.slot("pathing") is None:
        pathing_index = add("rb_compute_pathing_dev", {}, [])

    base_deps = [i for i in (pairs_index, pathing_index) if i]
    for _prefix, tool in metrics:
        if tool == "rb_compute_pathing_dev":
            continue  # handled above
        if tool == "rb_compute_attribution_fractions" and parts:
            add(tool, {**scope_args, "target": parts[1]}, base_deps)
        else:
            add(tool, dict(scope_args), base_deps)

    if not metrics and calls:
        # bare data request: summarize with averages
        add("rb_compute_average", dict(scope_args), [pairs_index] if pairs_index else [])

    if not calls:
        return PlanResult(calls=[], repairs=repairs,
                          diagnostic="no viable call sequence for this instruction",
                          origin="fallback")
    return PlanResult(calls=calls[:MAX_SEQUENCE_LENGTH], repairs=repairs, origin="fallback")


# -- execution ----------------------------------------------------------------

def validate_sequence(calls: list[ToolCall], registry: ToolRegistry) -> None:
    """Schema and dependency validation; rejects before any execution."""
    if len(calls) > MAX_SEQUENCE_LENGTH:
        raise ToolError(f"plan exceeds maximum length {MAX_SEQUENCE_LENGTH}")
    for position, call in enumerate(calls, start=1):
        if call.index != position:
            raise ToolError(f"call indices must be 1..K in order, got {call.index} "
                            f"at position {position}")
        bad = [d for d in call.depends_on if not 1 <= d < call.index]
        if bad:
            raise ToolError(
                f"call {call.index} ({call.tool_name}) has circular or forward "
                f"dependencies: {bad}")
        registry.validate_args(call.tool_name, call.args)


def execute_sequence(calls: list[ToolCall], ctx: ToolContext,
                     registry: ToolRegistry) -> AnalysisResult:
    """Run calls in dependency order, cache outputs, build provenance."""
    validate_sequence(calls, registry)
    outputs: list[ToolOutput] = []
    provenance = ProvenanceMap()
    error: tuple[int, str] | None = None
    resource_digest = digest_of(sorted(h.checksum for h in ctx.state.resources.values()))
    for call in calls:
        args = registry.validate_args(call.tool_name, call.args)
        # memoization key covers every input: args, loaded resources, and the
        # live slots (pairing/pathing) the tool may consume
        input_digest = digest_of({
            "args": args,
            "resources": resource_digest,
            "pairing": digest_of(ctx.slot("pairing")) if ctx.slot("pairing") else "",
            "pathing": digest_of(ctx.slot("pathing")) if ctx.slot("pathing") else "",
        })
        try:
            fields = registry.impl(call.tool_name)(ctx, **args)
        except ToolError as exc:
            error = (call.index, str(exc))
            break
        cache_key = f"{call.tool_name}:{input_digest[:24]}"
        ctx.state.cache_artifact(cache_key, fields, produced_by=f"call-{call.index}")
        output = ToolOutput(call_index=call.index, fields=fields)
        outputs.append(output)
        for name, value in fields.items():
            if _is_quantity(value):
                provenance.record(name, f"call-{call.index}.{name}")
    narrative = _narrative(calls, outputs, error)
    return AnalysisResult(calls=calls, outputs=outputs, provenance=provenance,
                          narrative=narrative, error=error)


def _narrative(calls: list[ToolCall], outputs: list[ToolOutput],
               error: tuple[int, str] | None) -> str:
    names = [c.tool_name for c in calls[:len(outputs)]]
    quantity_ids = [name for output in outputs for name, value in output.fields.items()
                    if _is_quantity(value)]
    lines = [f"Executed {len(outputs)} tool call(s): {', '.join(names)}."
             if names else "No tool calls executed."]
    if quantity_ids:
        shown = ", ".join(quantity_ids[:6])
        suffix = "" if len(quantity_ids) <= 6 else f" and {len(quantity_ids) - 6} more"
        lines.append(f"Reported quantities: {shown}{suffix}.")
    if error:
        lines.append(f"Halted at call {error[0]}: {error[1]}")
    return " ".join(lines)
