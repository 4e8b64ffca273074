from __future__ import annotations

import json

import pytest

from millwright.analysis import (
    ToolCall,
    execute_sequence,
    plan_calls,
    validate_sequence,
)
from millwright.errors import ToolError
from millwright.gateway import DisabledBackend, ScriptedBackend, ScriptedRule
from millwright.session import SessionState
from millwright.tools.impl import ToolContext


def scripted_planner(plan):
    return ScriptedBackend([ScriptedRule(role="analysis-planner", response=json.dumps(plan))])


class TestPlanning:
    def test_compensation_chain(self, loaded_ctx, registry):
        plan = plan_calls("compensation for parts 4 to 16", loaded_ctx,
                          DisabledBackend(), registry)
        names = [c.tool_name for c in plan.calls]
        assert names[0] == "compute_inspection_pairs"
        assert "rb_compute_pathing_dev" in names
        assert names[-1] == "rb_compute_pair_tool_comp"
        comp = plan.calls[-1]
        assert comp.args["parts"] == (4, 16)
        assert set(comp.depends_on) == {1, 2}

    def test_average_chain(self, loaded_ctx, registry):
        plan = plan_calls("average deviation for pair 2+17", loaded_ctx,
                          DisabledBackend(), registry)
        names = [c.tool_name for c in plan.calls]
        assert names == ["compute_inspection_pairs", "rb_compute_average"]
        assert plan.calls[1].args["pair_keys"] == ["2+17"]

    def test_missing_resource_empty_plan(self, registry):
        ctx = ToolContext(state=SessionState())
        plan = plan_calls("average deviation for parts 1 to 4", ctx,
                          DisabledBackend(), registry)
        assert plan.calls == []
        assert "resource missing" in plan.diagnostic

    def test_backend_proposal_used(self, loaded_ctx, registry):
        backend = scripted_planner([
            {"tool": "compute_inspection_pairs", "args": {}},
            {"tool": "rb_compute_average", "args": {"parts": ["4", "16"]},
             "depends_on": [1]},
        ])
        plan = plan_calls("whatever", loaded_ctx, backend, registry)
        assert plan.origin == "backend"
        assert plan.calls[1].args["parts"] == (4, 16)  # string->int repair

    def test_invalid_backend_calls_dropped(self, loaded_ctx, registry):
        backend = scripted_planner([
            {"tool": "not_a_tool", "args": {}},
            {"tool": "rb_compute_values", "args": {}},  # missing required pair_key
            {"tool": "compute_inspection_pairs", "args": {}},
        ])
        plan = plan_calls("average", loaded_ctx, backend, registry)
        assert [c.tool_name for c in plan.calls] == ["compute_inspection_pairs"]
        assert len(plan.repairs) == 2

    def test_unusable_backend_falls_back(self, loaded_ctx, registry):
        backend = scripted_planner([{"tool": "nope"}])
        plan = plan_calls("drift for parts 1 to 8", loaded_ctx, backend, registry)
        assert plan.origin == "fallback"
        assert any(c.tool_name == "rb_compute_wear_drift" for c in plan.calls)


class TestValidation:
    def test_forward_dependency_rejected(self, registry):
        calls = [ToolCall(index=1, tool_name="compute_inspection_pairs",
                          depends_on=[2]),
                 ToolCall(index=2, tool_name="rb_compute_average")]
        with pytest.raises(ToolError, match="circular or forward"):
            validate_sequence(calls, registry)

    def test_self_dependency_rejected(self, registry):
        calls = [ToolCall(index=1, tool_name="compute_inspection_pairs",
                          depends_on=[1])]
        with pytest.raises(ToolError, match="circular or forward"):
            validate_sequence(calls, registry)

    def test_bad_args_rejected_before_execution(self, loaded_ctx, registry):
        calls = [ToolCall(index=1, tool_name="rb_compute_values",
                          args={"pair_key": "2+17", "parts": "nope"})]
        with pytest.raises(ToolError):
            execute_sequence(calls, loaded_ctx, registry)
        assert loaded_ctx.state.cache == {}

    def test_length_cap(self, registry):
        calls = [ToolCall(index=i, tool_name="compute_inspection_pairs")
                 for i in range(1, 18)]
        with pytest.raises(ToolError, match="maximum length"):
            validate_sequence(calls, registry)


class TestExecution:
    def test_single_call_provenance(self, loaded_ctx, registry):
        calls = [ToolCall(index=1, tool_name="compute_inspection_pairs"),
                 ToolCall(index=2, tool_name="rb_compute_average",
                          args={"pair_keys": ["2+17"]}, depends_on=[1])]
        result = execute_sequence(calls, loaded_ctx, registry)
        assert result.error is None
        quantities = result.quantities()
        assert "avg[2+17]" in quantities
        for qid in quantities:
            target = result.provenance.resolve(qid)
            assert target in result.output_field_ids()

    def test_three_call_chain_and_determinism(self, loaded_ctx, registry):
        from millwright.session import digest_of

        calls = [
            ToolCall(index=1, tool_name="compute_inspection_pairs"),
            ToolCall(index=2, tool_name="rb_compute_pathing_dev", depends_on=[1]),
            ToolCall(index=3, tool_name="rb_compute_pair_tool_comp",
                     args={"parts": [4, 16]}, depends_on=[1, 2]),
        ]
        first = execute_sequence(calls, loaded_ctx, registry)
        second = execute_sequence(calls, loaded_ctx, registry)
        digests = [digest_of([o.fields for o in r.outputs]) for r in (first, second)]
        assert digests[0] == digests[1]
        assert "Trc[2+17]" in first.quantities()

    def test_halt_retains_partial_outputs(self, loaded_ctx, registry):
        calls = [
            ToolCall(index=1, tool_name="compute_inspection_pairs"),
            ToolCall(index=2, tool_name="rb_compute_values",
                     args={"pair_key": "2+99"}, depends_on=[1]),  # malformed key
            ToolCall(index=3, tool_name="rb_compute_average", depends_on=[1]),
        ]
        result = execute_sequence(calls, loaded_ctx, registry)
        assert result.error is not None
        assert result.error[0] == 2
        assert len(result.outputs) == 1
        assert "Halted at call 2" in result.narrative

    def test_outputs_cached_in_state(self, loaded_ctx, registry):
        calls = [ToolCall(index=1, tool_name="compute_inspection_pairs")]
        execute_sequence(calls, loaded_ctx, registry)
        assert any(key.startswith("compute_inspection_pairs:")
                   for key in loaded_ctx.state.cache)

    def test_narrative_quantities_are_in_provenance(self, loaded_ctx, registry):
        import re

        calls = [ToolCall(index=1, tool_name="compute_inspection_pairs"),
                 ToolCall(index=2, tool_name="rb_compute_wear_drift", depends_on=[1])]
        result = execute_sequence(calls, loaded_ctx, registry)
        mentioned = re.findall(r"[A-Za-z_]+\[[0-9+]+\]", result.narrative)
        for qid in mentioned:
            assert result.provenance.resolve(qid) is not None
