"""Central routing: interpret a query against session state and emit a
validated structured decision, or fall back to the deterministic keyword
heuristic when the backend fails or emits an invalid object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema

from millwright import parsing
from millwright.errors import BackendFailure, EscalationNeeded, MillwrightError
from millwright.gateway import Backend
from millwright.session import SessionState, digest_of

AGENTS = ("analysis", "kg")

ROUTING_SCHEMA = {
    "type": "object",
    "properties": {
        "agent": {"type": "string", "enum": list(AGENTS)},
        "instruction": {"type": "string", "minLength": 1},
        "input_refs": {"type": "array", "items": {"type": "string"}},
        "tool_categories": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["agent", "instruction", "input_refs", "tool_categories"],
    "additionalProperties": True,
}

KEYWORD_CATEGORIES = {
    "compensation": "Compensation geometry",
    "offset": "Compensation geometry",
    "drift": "Drift and variability proxies",
    "wear": "Drift and variability proxies",
    "deviation": "Statistics and indexing",
    "average": "Statistics and indexing",
    "std": "Statistics and indexing",
}

DATA_RESOURCE_KINDS = ("inspection-csv", "pathing-field", "deflection-field")


@dataclass(frozen=True)
class PreprocessedQuery:
    raw_text: str
    part_range: tuple[int, int] | None = None
    file_paths: tuple[str, ...] = ()
    reset_flag: bool = False
    pair_keys: tuple[str, ...] = ()


@dataclass(frozen=True)
class RoutingDecision:
    agent_id: str
    instruction: str
    input_refs: tuple[str, ...]
    tool_categories: tuple[str, ...]
    origin: str  # "model" | "fallback"

    def to_wire(self) -> dict:
        return {
            "agent": self.agent_id,
            "instruction": self.instruction,
            "input_refs": list(self.input_refs),
            "tool_categories": list(self.tool_categories),
        }


@dataclass(frozen=True)
class SchemaViolation:
    violations: tuple[str, ...]


def preprocess(query: str, state: SessionState | None = None) -> PreprocessedQuery:
    """Deterministic entity extraction; never errors on benign text."""
    trimmed = query.strip()
    if not trimmed:
        raise MillwrightError("empty query")
    return PreprocessedQuery(
        raw_text=trimmed,
        part_range=parsing.extract_part_range(trimmed),
        file_paths=tuple(parsing.extract_file_paths(trimmed)),
        reset_flag=parsing.has_reset(trimmed),
        pair_keys=tuple(parsing.extract_pair_keys(trimmed)),
    )


def validate_routing(raw: object, known_categories: set[str] | None = None,
                     origin: str = "model") -> RoutingDecision | SchemaViolation:
    """Accept iff all four fields are present with correct kinds and enums;
    the violation report names every failing field."""
    if not isinstance(raw, dict):
        return SchemaViolation(violations=("object: expected a JSON object",))
    validator = jsonschema.Draft202012Validator(ROUTING_SCHEMA)
    problems = []
    for error in validator.iter_errors(raw):
        if error.path:
            problems.append(f"{'.'.join(str(p) for p in error.path)}: {error.message}")
        else:
            problems.append(error.message)
    if known_categories is not None and isinstance(raw.get("tool_categories"), list):
        for category in raw["tool_categories"]:
            if isinstance(category, str) and category not in known_categories:
                problems.append(f"tool_categories: unknown category {category!r}")
    if problems:
        return SchemaViolation(violations=tuple(sorted(problems)))
    return RoutingDecision(
        agent_id=raw["agent"],
        instruction=raw["instruction"],
        input_refs=tuple(raw["input_refs"]),
        tool_categories=tuple(raw["tool_categories"]),
        origin=origin,
    )


ROUTER_PROMPT = """Route this manufacturing query to one downstream agent.
Query: {query}
Loaded resources: {resources}
Agents: analysis (deterministic tool computation) | kg (knowledge retrieval).
Respond with a JSON object with fields agent, instruction, input_refs, tool_categories.
"""


def fallback_decision(query: PreprocessedQuery,
                      state: SessionState) -> RoutingDecision | None:
    """Deterministic keyword heuristic over the query and loaded resources."""
    analysis_hits, kg_hits = parsing.keyword_route(query.raw_text)
    data_loaded = any(h.kind in DATA_RESOURCE_KINDS for h in state.resources.values())
    if analysis_hits > kg_hits:
        agent = "analysis"
    elif kg_hits > analysis_hits:
        agent = "kg"
    elif analysis_hits > 0 or data_loaded:
        agent = "analysis" if data_loaded else "kg"
    else:
        return None
    lowered = query.raw_text.lower()
    if agent == "analysis":
        categories = tuple(dict.fromkeys(
            cat for word, cat in KEYWORD_CATEGORIES.items() if word in lowered))
        if not categories:
            categories = ("Statistics and indexing",)
    else:
        categories = ("Knowledge retrieval",)
    refs = [name for name, h in state.resources.items() if h.kind in DATA_RESOURCE_KINDS]
    if query.part_range:
        refs.append(f"parts:{query.part_range[0]}-{query.part_range[1]}")
    refs.extend(query.pair_keys)
    instruction = " ".join(query.raw_text.split())
    return RoutingDecision(agent_id=agent, instruction=instruction,
                           input_refs=tuple(refs), tool_categories=categories,
                           origin="fallback")


def route(query: PreprocessedQuery, state: SessionState, backend: Backend,
          known_categories: set[str] | None = None,
          new_query: bool = True) -> tuple[RoutingDecision, SessionState]:
    """Backend routing with schema validation, deterministic fallback, and
    an agent-invoked state event. Raises EscalationNeeded when neither path
    can produce a decision."""
    decision: RoutingDecision | None = None
    try:
        raw = backend.complete("router", ROUTER_PROMPT.format(
            query=query.raw_text, resources=", ".join(sorted(state.resources)) or "none"))
        parsed = json.loads(raw)
        outcome = validate_routing(parsed, known_categories, origin="model")
        if isinstance(outcome, RoutingDecision):
            decision = outcome
    except (BackendFailure, json.JSONDecodeError):
        decision = None
    if decision is None:
        decision = fallback_decision(query, state)
    if decision is None:
        raise EscalationNeeded(
            "cannot route: no keyword match and no data resources loaded")
    state.apply("agent-invoked", {
        "agent_id": decision.agent_id,
        "instruction_digest": digest_of(decision.instruction)[:16],
        "new_query": new_query,
        "origin": decision.origin,
    })
    return decision, state
