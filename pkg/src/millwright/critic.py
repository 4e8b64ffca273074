"""Critic gate: four check classes, a bounded revise loop, and escalation.

Acceptance requires every applicable check to pass; the internal score J is
reported but never decides acceptance on its own. At most L revise verdicts
precede a terminal accept or escalate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from millwright import parsing
from millwright.blade import CompensationVector
from millwright.errors import IntegrityError
from millwright.kg.retrieval import RetrievalResult
from millwright.router import PreprocessedQuery
from millwright.session import ProvenanceMap, SessionState, resolve_provenance

CHECK_ORDER = ("intent", "grounding", "evidence", "safety")

# quantity-id prefix -> metric keyword usable in a refinement instruction
PREFIX_KEYWORD = {
    "avg": "average",
    "std": "std",
    "b": "drift",
    "w_d": "drift",
    "w_v": "variability",
    "c": "residual",
    "phi_p": "attribution",
    "phi_c": "attribution",
    "phi_d": "attribution",
    "psi_v": "attribution",
    "s_hat": "attribution",
    "Trc": "compensation",
    "Tlc": "compensation",
    "delta": "compensation",
    "p": "pathing",
}


@dataclass
class CriticConfig:
    budget: int = 3
    max_radius_offset: float = 0.010
    max_length_offset: float = 0.010
    psi_escalation_threshold: float = 0.5
    check_weights: dict[str, float] = field(default_factory=lambda: {
        "intent": 1.0, "grounding": 1.0, "evidence": 1.0, "safety": 1.0})

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError("critic budget must be >= 1")
        if self.max_radius_offset <= 0 or self.max_length_offset <= 0:
            raise ValueError("offset limits must be positive")


@dataclass
class Claim:
    text: str
    kind: str  # "constraint" | "observation"
    evidence: list[str] = field(default_factory=list)


@dataclass
class CandidateAnswer:
    origin: str  # "analysis" | "kg"
    narrative: str
    quantities: dict[str, Any] = field(default_factory=dict)
    provenance: ProvenanceMap = field(default_factory=ProvenanceMap)
    output_ids: set[str] = field(default_factory=set)
    evidence_ids: list[str] = field(default_factory=list)
    claims: list[Claim] = field(default_factory=list)
    proposed_offsets: list[CompensationVector] = field(default_factory=list)
    covered_parts: tuple[int, int] | None = None
    diagnostic: str | None = None


@dataclass
class CheckFailure:
    check: str
    detail: str
    non_repairable: bool = False


@dataclass
class CriticVerdict:
    decision: str  # accept | revise | escalate
    failed_checks: list[CheckFailure] = field(default_factory=list)
    next_agent: str | None = None
    refinement: str | None = None
    score_j: float = 0.0
    missing_info: list[str] = field(default_factory=list)


def _quantity_prefixes(quantities: dict[str, Any]) -> set[str]:
    prefixes = set()
    for qid in quantities:
        match = re.match(r"([A-Za-z_]+)(?:\[|$)", qid)
        if match:
            prefixes.add(match.group(1))
    return prefixes


def check_intent(query: PreprocessedQuery, candidate: CandidateAnswer) -> CheckFailure | None:
    """Required query entities (metric categories, pair keys, part window)
    must be reflected in the candidate."""
    if candidate.diagnostic and not candidate.quantities and not candidate.claims:
        return CheckFailure("intent", f"empty candidate: {candidate.diagnostic}")
    if candidate.origin == "kg":
        if not candidate.claims:
            return CheckFailure("intent", "empty candidate: no claims produced")
        return None
    if not candidate.quantities:
        return CheckFailure("intent", "empty candidate: no quantities reported")
    present = _quantity_prefixes(candidate.quantities)
    missing = []
    for prefix, _tool in parsing.requested_metrics(query.raw_text):
        if prefix not in present:
            missing.append(PREFIX_KEYWORD.get(prefix, prefix))
    if missing:
        wanted = sorted(set(missing))
        return CheckFailure("intent", "missing metric category: " + ", ".join(wanted))
    for key in query.pair_keys:
        if not any(f"[{key}]" in qid for qid in candidate.quantities):
            return CheckFailure("intent", f"requested pair {key} absent from results")
    if query.part_range and candidate.covered_parts:
        lo, hi = query.part_range
        clo, chi = candidate.covered_parts
        if clo > lo or chi < hi:
            return CheckFailure(
                "intent", f"parts {lo}-{hi} requested but only {clo}-{chi} covered")
    return None


def check_tool_grounding(candidate: CandidateAnswer) -> CheckFailure | None:
    """Every reported quantity must resolve through the provenance map to an
    existing tool-output field."""
    unmapped = []
    dangling = []
    for qid in candidate.quantities:
        try:
            target = resolve_provenance(candidate.provenance, qid,
                                        target_exists=candidate.output_ids.__contains__)
        except IntegrityError:
            dangling.append(qid)
            continue
        if target is None:
            unmapped.append(qid)
    if unmapped or dangling:
        parts = []
        if unmapped:
            parts.append("unmapped quantities: " + ", ".join(sorted(unmapped)))
        if dangling:
            parts.append("dangling provenance: " + ", ".join(sorted(dangling)))
        return CheckFailure("grounding", "; ".join(parts))
    return None


def check_evidence(candidate: CandidateAnswer,
                   retrieval: RetrievalResult | None) -> CheckFailure | None:
    """Constraint-tagged claims must cite retrieved triple identifiers."""
    retrieved = set(retrieval.all_ids()) if retrieval is not None else set()
    offending = []
    for claim in candidate.claims:
        if claim.kind != "constraint":
            continue
        if not claim.evidence or not any(e in retrieved for e in claim.evidence):
            offending.append(claim.text[:60])
    if offending:
        return CheckFailure("evidence",
                            "claims without retrieved evidence: " + "; ".join(offending))
    return None


def check_safety(candidate: CandidateAnswer, config: CriticConfig) -> CheckFailure | None:
    """Offset magnitude bounds, tilt sign consistency, and instability flags."""
    problems = []
    non_repairable = False
    for vec in candidate.proposed_offsets:
        if abs(vec.t_r) > config.max_radius_offset:
            problems.append(f"{vec.pair_key}: |t_r|={abs(vec.t_r):.6f} exceeds "
                            f"{config.max_radius_offset}")
            non_repairable = True
        if abs(vec.t_l) > config.max_length_offset:
            problems.append(f"{vec.pair_key}: |t_l|={abs(vec.t_l):.6f} exceeds "
                            f"{config.max_length_offset}")
            non_repairable = True
        if vec.t_l * vec.t_r < 0:
            problems.append(f"{vec.pair_key}: offset signs disagree with tilt convention")
    for qid, value in candidate.quantities.items():
        if qid.startswith("psi_v[") and isinstance(value, (int, float)) \
                and value > config.psi_escalation_threshold:
            problems.append(f"{qid}={value:.3f} above instability threshold "
                            f"{config.psi_escalation_threshold}; recommend escalation")
            non_repairable = True
    if problems:
        return CheckFailure("safety", "; ".join(problems), non_repairable=non_repairable)
    return None


def run_checks(query: PreprocessedQuery, candidate: CandidateAnswer,
               config: CriticConfig,
               retrieval: RetrievalResult | None = None) -> tuple[list[CheckFailure],
                                                                  float]:
    """All applicable checks in fixed order plus the weighted score J."""
    applicable: list[tuple[str, CheckFailure | None]] = [
        ("intent", check_intent(query, candidate))]
    if candidate.origin == "analysis":
        applicable.append(("grounding", check_tool_grounding(candidate)))
    if candidate.origin == "kg":
        applicable.append(("evidence", check_evidence(candidate, retrieval)))
    applicable.append(("safety", check_safety(candidate, config)))
    failures = [outcome for _, outcome in applicable if outcome is not None]
    total = sum(config.check_weights.get(name, 1.0) for name, _ in applicable)
    passed = sum(config.check_weights.get(name, 1.0)
                 for name, outcome in applicable if outcome is None)
    score = passed / total if total > 0 else 0.0
    return failures, score


_REVISION_TARGET = {"intent": None, "grounding": "analysis",
                    "evidence": "kg", "safety": "analysis"}


def _refinement_for(failure: CheckFailure, query: PreprocessedQuery,
                    candidate: CandidateAnswer) -> str:
    base = " ".join(query.raw_text.split())
    if failure.check == "intent":
        return f"{base}; also report {failure.detail.split(': ', 1)[-1]}"
    if failure.check == "grounding":
        return f"{base}; recompute with tool provenance for every quantity"
    if failure.check == "evidence":
        return f"{base}; cite retrieved triple identifiers for every constraint"
    return f"{base}; keep offsets within configured safety bounds"


def decide(query: PreprocessedQuery, candidate: CandidateAnswer, state: SessionState,
           config: CriticConfig,
           retrieval: RetrievalResult | None = None) -> tuple[CriticVerdict, SessionState]:
    """Accept, revise toward the first failed check's owner, or escalate.

    Escalates early only on non-repairable safety failures; otherwise revises
    while the invocation count stays under the budget.
    """
    failures, score = run_checks(query, candidate, config, retrieval)
    n_before = state.critic_count
    if not failures:
        verdict = CriticVerdict(decision="accept", score_j=score)
    else:
        ordered = sorted(failures, key=lambda f: CHECK_ORDER.index(f.check))
        first = ordered[0]
        hard_stop = any(f.non_repairable for f in ordered)
        if n_before < config.budget and not hard_stop:
            next_agent = _REVISION_TARGET[first.check] or candidate.origin
            verdict = CriticVerdict(
                decision="revise", failed_checks=ordered, next_agent=next_agent,
                refinement=_refinement_for(first, query, candidate), score_j=score)
        else:
            verdict = CriticVerdict(
                decision="escalate", failed_checks=ordered, score_j=score,
                missing_info=[f"resolve {f.check} failure: {f.detail}" for f in ordered])
    state.apply("critic-decided", {
        "decision": verdict.decision,
        "failed_checks": [[f.check, f.detail] for f in verdict.failed_checks],
        "score_j": verdict.score_j,
        "n_t": n_before,
    })
    return verdict, state


def record_human_override(state: SessionState, verdict: CriticVerdict,
                          decision: str, note: str = "") -> SessionState:
    """Human approvals append an event and retain the pre-override verdict."""
    from millwright.session import digest_of

    state.apply("human-approved", {
        "decision": decision,
        "note_digest": digest_of(note)[:16],
        "overridden_verdict": verdict.decision,
    })
    return state
