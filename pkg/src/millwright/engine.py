"""The decision-support loop: query in, verified recommendation or
escalation out, every step audited.

One turn: preprocess (resource commands, entity extraction), route to the
analysis or knowledge agent, execute deterministic tools or retrieval,
gate the candidate through the critic, revise within budget, and surface
the result with full provenance for human review.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from millwright import critic as critic_mod
from millwright import router as router_mod
from millwright.analysis import PlanResult, ToolCall, execute_sequence, plan_calls
from millwright.config import AppConfig
from millwright.critic import CandidateAnswer, Claim, CriticVerdict
from millwright.errors import EscalationNeeded, MillwrightError
from millwright.gateway import Backend, BackendFailure, make_backend
from millwright.kg.embedding import HashedEmbedder
from millwright.kg.retrieval import RetrievalResult
from millwright.kg.store import TripleStore
from millwright.router import PreprocessedQuery, RoutingDecision
from millwright.session import PayloadStore, SessionState, digest_of, to_jsonable
from millwright.tools.impl import ToolContext, build_registry


@dataclass
class TurnResult:
    turn_id: str
    session_id: str
    kind: str  # "recommendation" | "command"
    verdict: str  # "accepted" | "escalated"
    narrative: str
    quantities: list[dict] = field(default_factory=list)
    offsets: list[dict] = field(default_factory=list)
    evidence: list[dict] = field(default_factory=list)
    claims: list[dict] = field(default_factory=list)
    table: dict | None = None
    escalation: dict | None = None
    critic: dict | None = None
    audit_range: tuple[int, int] = (0, 0)
    elapsed_s: float = 0.0
    called_tools: list[str] = field(default_factory=list)
    called_calls: list[dict] = field(default_factory=list)
    routing: dict | None = None

    def to_payload(self) -> dict:
        return {
            "turn_id": self.turn_id,
            "session_id": self.session_id,
            "kind": self.kind,
            "verdict": self.verdict,
            "recommendation": {
                "narrative": self.narrative,
                "quantities": self.quantities,
                "offsets": self.offsets,
                "evidence": self.evidence,
                "claims": self.claims,
                "table": self.table,
            },
            "escalation": self.escalation,
            "critic": self.critic,
            "audit_range": list(self.audit_range),
            "elapsed_s": self.elapsed_s,
            "called_tools": self.called_tools,
            "called_calls": self.called_calls,
            "routing": self.routing,
        }


class Engine:
    """Owns the registry, backend, knowledge store, and all sessions."""

    def __init__(self, config: AppConfig | None = None,
                 backend: Backend | None = None,
                 kg_store: TripleStore | None = None,
                 critic_enabled: bool = True,
                 payload_root: str | None = None):
        self.config = config or AppConfig()
        self.registry = build_registry()
        self.backend = backend if backend is not None else make_backend(self.config.backend)
        self.embedder = HashedEmbedder(dim=self.config.embedder_dim)
        self.kg_store = kg_store
        if self.kg_store is None and self.config.kg_store_dir:
            self.kg_store = TripleStore.load(self.config.kg_store_dir, self.embedder)
        if self.kg_store is None and self.config.kg_seed_dir:
            self.kg_store = TripleStore(self.embedder)
            for path in sorted(Path(self.config.kg_seed_dir).glob("*.tsv")):
                self.kg_store.ingest_tsv(path)
        self.critic_enabled = critic_enabled
        self.payload_root = payload_root
        self._sessions: dict[str, tuple[SessionState, ToolContext]] = {}
        self._turns: dict[str, TurnResult] = {}
        self._approved_turns: set[str] = set()
        self._units = self._unit_table()

    def _unit_table(self) -> dict[str, str]:
        units: dict[str, str] = {}
        for name in self.registry.names():
            for output in self.registry.spec(name).outputs:
                prefix = output.name.split("[")[0]
                units.setdefault(prefix, output.unit)
        return units

    def unit_for(self, quantity_id: str) -> str:
        return self._units.get(quantity_id.split("[")[0], "")

    # -- session management --------------------------------------------------

    def new_session(self) -> str:
        payloads = PayloadStore(
            Path(self.payload_root) / uuid.uuid4().hex[:8] if self.payload_root else None)
        state = SessionState(payloads=payloads)
        ctx = ToolContext(
            state=state, kg_store=self.kg_store,
            retrieval_config=self.config.retrieval, embedder=self.embedder,
            theta_default=self.config.theta_deg, comp_bound=self.config.comp_bound)
        self._sessions[state.session_id] = (state, ctx)
        return state.session_id

    def session(self, session_id: str) -> tuple[SessionState, ToolContext]:
        if session_id not in self._sessions:
            raise MillwrightError(f"unknown session {session_id}")
        return self._sessions[session_id]

    def kg_evidence(self, triple_id: str) -> dict:
        if self.kg_store is None:
            raise MillwrightError("no knowledge store configured")
        record = self.kg_store.get(triple_id)
        return {
            "id": record.id, "subject": record.subject, "relation": record.relation,
            "object": record.object, "context": record.context,
            "figure_ref": record.figure_ref, "source_doc": record.source_doc,
        }

    # -- the loop --------------------------------------------------------------

    def turn(self, session_id: str, query_text: str,
             routing_transform: Callable[[RoutingDecision], RoutingDecision] | None = None,
             ) -> TurnResult:
        result = self._turn_impl(session_id, query_text, routing_transform)
        self._turns[result.turn_id] = result
        return result

    def _turn_impl(self, session_id: str, query_text: str,
                   routing_transform: Callable[[RoutingDecision], RoutingDecision] | None,
                   ) -> TurnResult:
        state, ctx = self.session(session_id)
        started = time.perf_counter()
        audit_start = len(state.audit)
        turn_id = uuid.uuid4().hex[:10]

        query = router_mod.preprocess(query_text, state)
        if query.reset_flag and not query.file_paths:
            state.apply("reset", {})
            return self._command_result(turn_id, state, audit_start, started,
                                        "Session reset: cache and resources cleared; "
                                        "audit trail preserved.")
        self._autoload(query, state)

        try:
            decision, _ = router_mod.route(query, state, self.backend,
                                           self.registry.categories(), new_query=True)
        except EscalationNeeded as exc:
            return self._escalation_result(
                turn_id, state, audit_start, started,
                narrative="Routing failed.",
                failed=[{"check": "routing", "detail": str(exc)}],
                missing=["provide a data file or rephrase toward analysis/knowledge"],
                called=[])
        if routing_transform is not None:
            decision = routing_transform(decision)

        called: list[dict] = []
        agent = decision.agent_id
        instruction = decision.instruction
        last_verdict: CriticVerdict | None = None
        candidate: CandidateAnswer | None = None
        retrieval: RetrievalResult | None = None
        for _ in range(self.config.critic.budget + 2):  # decide() terminates the loop
            candidate, retrieval, calls = self._dispatch(agent, instruction, ctx)
            called.extend(calls)
            if not self.critic_enabled:
                last_verdict = CriticVerdict(decision="accept", score_j=1.0)
                break
            last_verdict, _ = critic_mod.decide(query, candidate, state,
                                                self.config.critic, retrieval)
            if last_verdict.decision == "accept":
                break
            if last_verdict.decision == "escalate":
                break
            agent = last_verdict.next_agent or agent
            instruction = last_verdict.refinement or instruction
            state.apply("agent-invoked", {
                "agent_id": agent,
                "instruction_digest": digest_of(instruction)[:16],
                "new_query": False,
                "origin": "critic-refinement",
            })
        assert candidate is not None and last_verdict is not None

        if last_verdict.decision == "accept":
            return self._accept_result(turn_id, state, audit_start, started, query,
                                       decision, candidate, last_verdict, called)
        report = {
            "candidate_narrative": candidate.narrative,
            "failed_checks": [{"check": f.check, "detail": f.detail}
                              for f in last_verdict.failed_checks],
            "missing_info": last_verdict.missing_info,
        }
        state.payloads.put(report)
        return self._escalation_result(
            turn_id, state, audit_start, started,
            narrative=candidate.narrative,
            failed=report["failed_checks"], missing=report["missing_info"],
            called=called, decision=decision, verdict=last_verdict)

    # -- dispatch ---------------------------------------------------------------

    def _dispatch(self, agent: str, instruction: str, ctx: ToolContext,
                  ) -> tuple[CandidateAnswer, RetrievalResult | None, list[dict]]:
        if agent == "analysis":
            return self._dispatch_analysis(instruction, ctx)
        return self._dispatch_kg(instruction, ctx)

    def _dispatch_analysis(self, instruction: str, ctx: ToolContext,
                           ) -> tuple[CandidateAnswer, None, list[dict]]:
        ctx.set_slot("compensation", None)
        plan = plan_calls(instruction, ctx, self.backend, self.registry)
        if not plan.calls:
            return (CandidateAnswer(origin="analysis",
                                    narrative=plan.diagnostic or "no plan",
                                    diagnostic=plan.diagnostic or "no viable plan"),
                    None, [])
        result = execute_sequence(plan.calls, ctx, self.registry)
        offsets = ctx.slot("compensation") or []
        candidate = CandidateAnswer(
            origin="analysis",
            narrative=result.narrative,
            quantities=result.quantities(),
            provenance=result.provenance,
            output_ids=result.output_field_ids(),
            proposed_offsets=offsets,
            covered_parts=self._covered_parts(plan, ctx),
            diagnostic=result.error[1] if result.error else None,
        )
        executed = [{"tool": c.tool_name, "args": to_jsonable(c.args)}
                    for c in plan.calls[:len(result.outputs)]]
        return candidate, None, executed

    def _covered_parts(self, plan: PlanResult, ctx: ToolContext) -> tuple[int, int] | None:
        ranges = [c.args["parts"] for c in plan.calls if c.args.get("parts")]
        if ranges:
            return (min(r[0] for r in ranges), max(r[1] for r in ranges))
        pairing = ctx.slot("pairing")
        if pairing is not None and pairing.measurements:
            parts = [m.part_index for m in pairing.measurements]
            return (min(parts), max(parts))
        return None

    def _dispatch_kg(self, instruction: str, ctx: ToolContext,
                     ) -> tuple[CandidateAnswer, RetrievalResult | None, list[dict]]:
        calls = [ToolCall(index=1, tool_name="kg_retrieve",
                          args={"query": instruction})]
        result = execute_sequence(calls, ctx, self.registry)
        retrieval: RetrievalResult | None = ctx.slot("retrieval")
        if result.error or retrieval is None or retrieval.empty_knowledge:
            detail = result.error[1] if result.error else "knowledge store is empty"
            executed = [{"tool": c.tool_name, "args": to_jsonable(c.args)}
                        for c in calls[:len(result.outputs)]]
            return (CandidateAnswer(origin="kg", narrative=detail, diagnostic=detail),
                    retrieval, executed)
        claims = []
        for triple_id, _score in retrieval.selected:
            record = ctx.kg_store.get(triple_id)
            claims.append(Claim(
                text=f"{record.subject} {record.relation.lower().replace('_', ' ')} "
                     f"{record.object}: {record.context}",
                kind="constraint", evidence=[triple_id]))
        narrative = self._synthesize_kg(instruction, claims)
        candidate = CandidateAnswer(
            origin="kg", narrative=narrative,
            quantities=result.quantities(),
            provenance=result.provenance,
            output_ids=result.output_field_ids(),
            evidence_ids=retrieval.all_ids(),
            claims=claims)
        return candidate, retrieval, [{"tool": c.tool_name, "args": to_jsonable(c.args)}
                                      for c in calls]

    def _synthesize_kg(self, instruction: str, claims: list[Claim]) -> str:
        prompt = (f"Question: {instruction}\n"
                  + "\n".join(f"- {c.text} [{c.evidence[0]}]" for c in claims)
                  + "\nSynthesize an answer citing the bracketed evidence ids.")
        try:
            return self.backend.complete("kg-synthesizer", prompt)
        except BackendFailure:
            lines = [f"Retrieved evidence for: {instruction}"]
            lines += [f"- {c.text} [{c.evidence[0]}]" for c in claims]
            return "\n".join(lines)

    # -- result assembly ---------------------------------------------------------

    def _command_result(self, turn_id: str, state: SessionState, audit_start: int,
                        started: float, narrative: str) -> TurnResult:
        return TurnResult(
            turn_id=turn_id, session_id=state.session_id, kind="command",
            verdict="accepted", narrative=narrative,
            audit_range=(audit_start, len(state.audit)),
            elapsed_s=time.perf_counter() - started)

    def _accept_result(self, turn_id: str, state: SessionState, audit_start: int,
                       started: float, query: PreprocessedQuery,
                       decision: RoutingDecision, candidate: CandidateAnswer,
                       verdict: CriticVerdict, called: list[dict]) -> TurnResult:
        quantities = [{
            "id": qid,
            "value": value,
            "unit": self.unit_for(qid),
            "provenance": candidate.provenance.resolve(qid),
        } for qid, value in sorted(candidate.quantities.items())]
        offsets = [{
            "pair_key": vec.pair_key,
            "trc": f"{vec.t_r:.6f}",
            "tlc": f"{vec.t_l:.6f}",
            "delta": f"{vec.delta:.6f}",
            "within_bounds": (abs(vec.t_r) <= self.config.critic.max_radius_offset
                              and abs(vec.t_l) <= self.config.critic.max_length_offset),
        } for vec in candidate.proposed_offsets]
        table = None
        if offsets:
            from millwright.blade import parse_pair_key
            rows = sorted(offsets, key=lambda o: parse_pair_key(o["pair_key"])[0])
            table = {"columns": ["Pair Key", "Trc", "Tlc"],
                     "rows": [[o["pair_key"], o["trc"], o["tlc"]] for o in rows]}
        evidence = [self.kg_evidence(i) for i in candidate.evidence_ids] \
            if candidate.evidence_ids and self.kg_store else []
        return TurnResult(
            turn_id=turn_id, session_id=state.session_id, kind="recommendation",
            verdict="accepted", narrative=candidate.narrative,
            quantities=quantities, offsets=offsets, evidence=evidence,
            claims=[{"text": c.text, "kind": c.kind, "evidence": c.evidence}
                    for c in candidate.claims],
            table=table,
            critic={"decision": verdict.decision, "score_j": verdict.score_j,
                    "iterations": state.critic_count},
            audit_range=(audit_start, len(state.audit)),
            elapsed_s=time.perf_counter() - started,
            called_tools=[c["tool"] for c in called],
            called_calls=called,
            routing={"agent": decision.agent_id, "origin": decision.origin,
                     "instruction": decision.instruction})

    def _escalation_result(self, turn_id: str, state: SessionState, audit_start: int,
                           started: float, narrative: str, failed: list[dict],
                           missing: list[str], called: list[dict],
                           decision: RoutingDecision | None = None,
                           verdict: CriticVerdict | None = None) -> TurnResult:
        return TurnResult(
            turn_id=turn_id, session_id=state.session_id, kind="recommendation",
            verdict="escalated", narrative=narrative,
            escalation={"failed_checks": failed, "missing_info": missing},
            critic=({"decision": verdict.decision, "score_j": verdict.score_j,
                     "iterations": state.critic_count} if verdict else None),
            audit_range=(audit_start, len(state.audit)),
            elapsed_s=time.perf_counter() - started,
            called_tools=[c["tool"] for c in called],
            called_calls=called,
            routing=({"agent": decision.agent_id, "origin": decision.origin,
                      "instruction": decision.instruction} if decision else None))

    # -- resource commands ---------------------------------------------------------

    def _autoload(self, query: PreprocessedQuery, state: SessionState) -> None:
        for path_text in query.file_paths:
            path = Path(path_text)
            if not path.exists():
                continue  # analysis will surface a resource-missing escalation
            name, kind = self._classify_resource(path)
            existing = state.resources.get(name)
            if existing is not None and Path(existing.uri) == path:
                continue
            state.load_resource(name, kind, path)

    @staticmethod
    def _classify_resource(path: Path) -> tuple[str, str]:
        stem = path.stem.lower()
        if "path" in stem:
            return "pathing", "pathing-field"
        if "deflection" in stem:
            return "deflection", "deflection-field"
        if path.suffix.lower() in (".png", ".jpg", ".jpeg"):
            return path.stem, "image"
        return "inspection", "inspection-csv"

    def turn_result(self, turn_id: str) -> TurnResult:
        if turn_id not in self._turns:
            raise MillwrightError(f"unknown turn {turn_id}")
        return self._turns[turn_id]

    def approve(self, session_id: str, turn_id: str, decision: str,
                note: str = "") -> int:
        """Record a human approval/override for a turn; returns the new audit
        index. A second submission for the same turn is rejected as stale."""
        state, _ = self.session(session_id)
        result = self.turn_result(turn_id)
        if result.session_id != session_id:
            raise MillwrightError(f"turn {turn_id} does not belong to this session")
        if turn_id in self._approved_turns:
            raise MillwrightError(f"turn {turn_id} already has a recorded decision")
        verdict = CriticVerdict(decision=result.verdict)
        critic_mod.record_human_override(state, verdict, decision, note)
        self._approved_turns.add(turn_id)
        return len(state.audit) - 1
