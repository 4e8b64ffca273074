from __future__ import annotations

import dataclasses
import time

import pytest

from millwright.config import AppConfig
from millwright.critic import CriticConfig
from millwright.engine import Engine
from millwright.fixtures import write_demo_workspace
from millwright.gateway import DisabledBackend
from millwright.session import SessionState


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    layout = write_demo_workspace(tmp_path)
    monkeypatch.chdir(tmp_path)
    return layout


@pytest.fixture
def engine(workspace, kg_store):
    return Engine(config=AppConfig(), backend=DisabledBackend(), kg_store=kg_store)


COMP_QUERY = "load './Inspection_Aggregated.csv' and give me compensation for parts 4 to 16"


class TestCompensationTurn:
    def test_full_turn_shape(self, engine):
        sid = engine.new_session()
        started = time.perf_counter()
        result = engine.turn(sid, COMP_QUERY)
        assert time.perf_counter() - started < 1.0
        assert result.verdict == "accepted"
        assert result.table is not None
        assert result.table["columns"] == ["Pair Key", "Trc", "Tlc"]
        assert len(result.table["rows"]) == 15
        assert result.table["rows"][0][0] == "2+17"
        assert result.table["rows"][-1][0] == "16+31"

    def test_provenance_fully_resolvable(self, engine):
        sid = engine.new_session()
        result = engine.turn(sid, COMP_QUERY)
        assert result.quantities
        for q in result.quantities:
            assert q["provenance"], f"{q['id']} lacks provenance"

    def test_offset_ratio_and_bounds(self, engine):
        sid = engine.new_session()
        result = engine.turn(sid, COMP_QUERY)
        for offset in result.offsets:
            assert offset["within_bounds"]
            assert float(offset["tlc"]) / float(offset["trc"]) == pytest.approx(
                2.1445, abs=0.001)

    def test_audit_replay(self, engine):
        sid = engine.new_session()
        engine.turn(sid, COMP_QUERY)
        state, _ = engine.session(sid)
        replayed = SessionState.replay(state.audit.events, state.payloads)
        assert replayed.digest() == state.digest()

    def test_determinism_across_sessions(self, engine):
        first = engine.turn(engine.new_session(), COMP_QUERY)
        second = engine.turn(engine.new_session(), COMP_QUERY)
        assert first.table == second.table
        assert [q["value"] for q in first.quantities] == \
               [q["value"] for q in second.quantities]


class TestResourceCommands:
    def test_bare_load_summarizes(self, engine):
        sid = engine.new_session()
        result = engine.turn(sid, "load './Inspection_Aggregated.csv'")
        assert result.verdict == "accepted"
        assert any(q["id"].startswith("avg") for q in result.quantities)
        state, _ = engine.session(sid)
        assert "inspection" in state.resources

    def test_reset_clears(self, engine):
        sid = engine.new_session()
        engine.turn(sid, "load './Inspection_Aggregated.csv'")
        result = engine.turn(sid, "reset")
        assert result.kind == "command"
        state, _ = engine.session(sid)
        assert state.resources == {}
        assert len(state.audit) > 0

    def test_query_before_load_escalates_resource_missing(self, engine):
        sid = engine.new_session()
        result = engine.turn(sid, "give me compensation for parts 4 to 16")
        assert result.verdict == "escalated"
        details = " ".join(f["detail"] for f in result.escalation["failed_checks"])
        assert "resource missing" in details
        assert result.escalation["missing_info"]


class TestKgTurn:
    def test_causal_query(self, engine):
        sid = engine.new_session()
        result = engine.turn(sid, "causes of this deflection for the rotor blade")
        assert result.verdict == "accepted"
        assert result.claims
        assert all(c["kind"] == "constraint" for c in result.claims)
        assert all(c["evidence"] for c in result.claims)
        assert result.evidence
        assert {e["id"] for e in result.evidence} >= \
               {c["evidence"][0] for c in result.claims}

    def test_evidence_lookup(self, engine):
        sid = engine.new_session()
        result = engine.turn(sid, "causes of this deflection for the rotor blade")
        triple_id = result.claims[0]["evidence"][0]
        record = engine.kg_evidence(triple_id)
        assert record["id"] == triple_id
        assert record["source_doc"]

    def test_empty_store_escalates(self, workspace):
        engine = Engine(config=AppConfig(), backend=DisabledBackend(), kg_store=None)
        sid = engine.new_session()
        result = engine.turn(sid, "explain why the blade deflects")
        assert result.verdict == "escalated"


def strip_compensation(decision):
    degraded = decision.instruction.replace("compensation", "").strip()
    return dataclasses.replace(decision, instruction=degraded or "parts 4 to 16")


class TestCriticRepair:
    def test_degraded_routing_recovered(self, engine):
        sid = engine.new_session()
        result = engine.turn(sid, COMP_QUERY, routing_transform=strip_compensation)
        assert result.verdict == "accepted"
        assert "rb_compute_pair_tool_comp" in result.called_tools
        assert result.critic["iterations"] >= 2

    def test_no_critic_stays_degraded(self, workspace, kg_store):
        engine = Engine(config=AppConfig(), backend=DisabledBackend(),
                        kg_store=kg_store, critic_enabled=False)
        sid = engine.new_session()
        result = engine.turn(sid, COMP_QUERY, routing_transform=strip_compensation)
        assert result.verdict == "accepted"
        assert "rb_compute_pair_tool_comp" not in result.called_tools

    def test_budget_bounds_invocations(self, workspace, kg_store):
        config = AppConfig()
        config.critic = CriticConfig(budget=2)
        engine = Engine(config=config, backend=DisabledBackend(), kg_store=kg_store)
        sid = engine.new_session()
        result = engine.turn(sid, "give me compensation for parts 4 to 16")  # no data
        assert result.verdict == "escalated"
        state, _ = engine.session(sid)
        assert state.critic_count == config.critic.budget + 1


class TestApprovals:
    def test_approval_appends_human_event(self, engine):
        sid = engine.new_session()
        result = engine.turn(sid, COMP_QUERY)
        index = engine.approve(sid, result.turn_id, "approved", note="ship it")
        state, _ = engine.session(sid)
        assert state.audit.events[index].actor == "human"
        assert state.approvals == ["approved"]

    def test_double_submit_rejected_as_stale(self, engine):
        from millwright.errors import MillwrightError

        sid = engine.new_session()
        result = engine.turn(sid, COMP_QUERY)
        engine.approve(sid, result.turn_id, "approved")
        with pytest.raises(MillwrightError, match="already"):
            engine.approve(sid, result.turn_id, "approved")

    def test_override_retains_escalated_verdict(self, engine):
        sid = engine.new_session()
        result = engine.turn(sid, "give me compensation for parts 4 to 16")
        assert result.verdict == "escalated"
        engine.approve(sid, result.turn_id, "override", note="operator judgment")
        state, _ = engine.session(sid)
        payload = state.payloads.get(state.audit.events[-1].digest)["payload"]
        assert payload["overridden_verdict"] == "escalated"
