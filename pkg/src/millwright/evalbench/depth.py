"""Tool-depth benchmark: L1 single call, L2 two dependent calls, L3 three
or more, judged against required tools with argument constraints and
dependency-consistent ordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from millwright.errors import MillwrightError
from millwright.gateway import ScriptedBackend, ScriptedRule


@dataclass(frozen=True)
class RequiredTool:
    name: str
    args_subset: dict = field(default_factory=dict)


@dataclass
class BenchQuery:
    id: str
    level: str  # L1 | L2 | L3
    prompt: str
    required: list[RequiredTool]
    hints: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        count = len(self.required)
        if self.level == "L1" and count != 1:
            raise MillwrightError(f"{self.id}: L1 requires exactly 1 tool, got {count}")
        if self.level == "L2" and count != 2:
            raise MillwrightError(f"{self.id}: L2 requires exactly 2 tools, got {count}")
        if self.level == "L3" and count < 3:
            raise MillwrightError(f"{self.id}: L3 requires >= 3 tools, got {count}")


def _args_match(subset: dict, args: dict) -> bool:
    for key, wanted in subset.items():
        have = args.get(key)
        if isinstance(wanted, list) and isinstance(have, (list, tuple)):
            if list(have) != list(wanted):
                return False
        elif have != wanted:
            return False
    return True


def judge_pass(query: BenchQuery, called_calls: list[dict]) -> bool:
    """Pass iff required tools appear with matching arguments in dependency
    order; interleaved helper calls never flip the verdict (subsequence
    semantics ignore extras)."""
    cursor = 0
    for requirement in query.required:
        found = False
        while cursor < len(called_calls):
            call = called_calls[cursor]
            cursor += 1
            if call["tool"] == requirement.name and _args_match(
                    requirement.args_subset, call.get("args", {})):
                found = True
                break
        if not found:
            return False
    return True


@dataclass
class DepthReport:
    per_level: dict[str, float]
    records: list[dict]

    def write_csv(self, path: str | Path) -> None:
        lines = ["level,pass_rate,n"]
        counts = {}
        for record in self.records:
            counts.setdefault(record["level"], []).append(record["passed"])
        for level in sorted(self.per_level):
            lines.append(f"{level},{self.per_level[level]:.4f},{len(counts[level])}")
        Path(path).write_text("\n".join(lines) + "\n")


def run_depth_benchmark(queries: list[BenchQuery], make_engine, backend=None,
                        setup=None) -> DepthReport:
    """Run every query through a fresh engine session and judge the called
    sequence; engine crashes count as failures and are logged in records."""
    records = []
    for query in queries:
        engine = make_engine(backend=backend) if backend is not None else make_engine()
        session_id = engine.new_session()
        if setup is not None:
            setup(engine, session_id)
        try:
            result = engine.turn(session_id, query.prompt)
            passed = judge_pass(query, result.called_calls)
            records.append({"id": query.id, "level": query.level, "passed": passed,
                            "called": result.called_tools})
        except Exception as exc:  # noqa: BLE001 - crash counts as fail, logged
            records.append({"id": query.id, "level": query.level, "passed": False,
                            "called": [], "error": str(exc)})
    per_level: dict[str, float] = {}
    for level in sorted({q.level for q in queries}):
        level_records = [r for r in records if r["level"] == level]
        per_level[level] = sum(r["passed"] for r in level_records) / len(level_records)
    return DepthReport(per_level=per_level, records=records)


# -- synthetic suite generation ------------------------------------------------

L1_POOL = [
    RequiredTool("compute_inspection_pairs"),
    RequiredTool("rb_compute_level", {"pair_key": "2+17"}),
    RequiredTool("rb_compute_position_in_level", {"pair_key": "5+20"}),
    RequiredTool("rb_compute_tool_length", {"delta": 0.002}),
    RequiredTool("rb_compute_radius_offset", {"delta": 0.002}),
]
L2_METRICS = ["rb_compute_average", "rb_compute_std_dev", "rb_compute_wear_drift"]


def synthesize_depth_suite(n_per_level: int, defect_rates: dict[str, float],
                           ) -> tuple[list[BenchQuery], ScriptedBackend]:
    """Deterministic synthetic queries plus a scripted planner configured to
    produce a known defect fraction per level (defects are dropped tools or
    pairs-before-dependent ordering swaps, both always detectable)."""
    queries: list[BenchQuery] = []
    rules: list[ScriptedRule] = []
    for level, count in (("L1", n_per_level), ("L2", n_per_level), ("L3", n_per_level)):
        n_defects = round(defect_rates.get(level, 0.0) * count)
        for i in range(count):
            qid = f"{level.lower()}-{i:03d}"
            defective = i < n_defects
            queries.append(_make_query(level, i, qid))
            rules.append(_make_rule(queries[-1], defective, swap=(i % 2 == 0)))
    return queries, ScriptedBackend(rules)


def _make_query(level: str, i: int, qid: str) -> BenchQuery:
    if level == "L1":
        required = [L1_POOL[i % len(L1_POOL)]]
        prompt = f"[{qid}] run a single deviation step for the blade data"
    elif level == "L2":
        metric = L2_METRICS[i % len(L2_METRICS)]
        required = [RequiredTool("compute_inspection_pairs"),
                    RequiredTool(metric, {"parts": [2, 9]})]
        prompt = f"[{qid}] compute the {metric.split('_')[-1]} statistic for parts 2 to 9"
    else:
        required = [RequiredTool("compute_inspection_pairs"),
                    RequiredTool("rb_compute_wear_drift", {"parts": [2, 12]}),
                    RequiredTool("rb_compute_pair_tool_comp", {"parts": [2, 12]})]
        prompt = f"[{qid}] full drift and compensation chain for parts 2 to 12"
    return BenchQuery(id=qid, level=level, prompt=prompt, required=required)


def _make_rule(query: BenchQuery, defective: bool, swap: bool) -> ScriptedRule:
    plan = [{"tool": r.name, "args": r.args_subset} for r in query.required]
    if defective:
        if swap and len(plan) >= 2:
            plan = [plan[1], plan[0]] + plan[2:]  # dependent call before its producer
        elif len(plan) >= 2:
            plan = plan[:-1]  # drop the final required tool
        else:
            replacement = "rb_compute_level" \
                if plan[0]["tool"] != "rb_compute_level" else "rb_compute_position_in_level"
            plan = [{"tool": replacement, "args": {"pair_key": "2+17"}}]
    return ScriptedRule(role="analysis-planner", contains=f"[{query.id}]",
                        response=json.dumps(plan))
