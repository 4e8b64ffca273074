"""Paired critic ablation: deterministic routing degradation, set-based
tool-selection scoring, and critic-value metrics over paired trials.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from millwright.errors import MillwrightError

# infrastructure-only helper calls excluded from selection scoring
HELPER_TOOLS = frozenset({"compute_inspection_pairs", "fetch_inspection_slices",
                          "kg_initial"})


@dataclass
class PairedTrial:
    query_id: str
    condition: str  # "critic" | "no-critic"
    dropped_hints: list[str]
    called_tools: list[str]
    precision: float
    recall: float
    f1: float
    missing_count: int


def degrade_routing(query_id: str, hints: list[str], drop_p: float,
                    seed: int) -> set[str]:
    """Per-hint keep/drop by a seeded keyed hash; identical inputs give
    identical drops, and hint-free queries yield the empty set."""
    if not 0.0 <= drop_p <= 1.0:
        raise MillwrightError(f"drop probability must be in [0,1], got {drop_p}")
    dropped = set()
    for hint in hints:
        digest = hashlib.sha256(f"{query_id}|{hint}|{seed}".encode()).digest()
        fraction = int.from_bytes(digest[:8], "big") / float(1 << 64)
        if fraction < drop_p:
            dropped.add(hint)
    return dropped


@dataclass
class SelectionScore:
    precision: float
    recall: float
    f1: float
    missing: int
    degenerate: bool = False


def score_tool_selection(required: list[str], called: list[str],
                         exclude: frozenset[str] = HELPER_TOOLS) -> SelectionScore:
    """Set-based precision/recall/F1 after dropping infrastructure helpers."""
    required_set = set(required) - exclude
    called_set = set(called) - exclude
    degenerate = not required_set
    if not called_set:
        precision = 1.0 if degenerate else 0.0
    else:
        precision = len(required_set & called_set) / len(called_set)
    recall = 1.0 if degenerate else len(required_set & called_set) / len(required_set)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return SelectionScore(precision=precision, recall=recall, f1=f1,
                          missing=len(required_set - called_set), degenerate=degenerate)


@dataclass
class CriticValue:
    improved_rate: float
    reduced_missing_rate: float
    full_recovery_rate: float
    n_pairs: int
    n_degraded: int


def critic_value_metrics(trials: list[PairedTrial]) -> CriticValue:
    """Pair trials by query id and compute the three critic-value rates.

    Full recovery is measured only over degraded queries where the no-critic
    run misses at least one required tool.
    """
    by_query: dict[str, dict[str, PairedTrial]] = {}
    for trial in trials:
        by_query.setdefault(trial.query_id, {})[trial.condition] = trial
    improved = reduced = 0
    recovery_hits = recovery_base = 0
    for query_id, pair in sorted(by_query.items()):
        if set(pair) != {"critic", "no-critic"}:
            raise MillwrightError(f"query {query_id} is not a complete pair")
        with_critic, without = pair["critic"], pair["no-critic"]
        if with_critic.f1 > without.f1:
            improved += 1
        if with_critic.missing_count < without.missing_count:
            reduced += 1
        if with_critic.dropped_hints and without.missing_count >= 1:
            recovery_base += 1
            if with_critic.missing_count == 0:
                recovery_hits += 1
    n = len(by_query)
    if n == 0:
        raise MillwrightError("no paired trials")
    return CriticValue(
        improved_rate=improved / n,
        reduced_missing_rate=reduced / n,
        full_recovery_rate=(recovery_hits / recovery_base) if recovery_base else 0.0,
        n_pairs=n,
        n_degraded=recovery_base,
    )


@dataclass(frozen=True)
class AblationQuery:
    id: str
    prompt: str
    required_tools: tuple[str, ...]
    hints: tuple[str, ...]


# hint word -> required tool. Constraints on this vocabulary: "average" is
# absent because the planner's bare-data default calls it even after the hint
# is dropped, and "residual" is absent because its quantity prefix (c) is also
# emitted by the drift fit, so the intent check can pass without the tool.
ABLATION_HINT_TOOLS = {
    "drift": "rb_compute_wear_drift",
    "variability": "rb_compute_process_variability",
    "std": "rb_compute_std_dev",
    "compensation": "rb_compute_pair_tool_comp",
}


def synthesize_ablation_suite(n_queries: int = 30) -> list[AblationQuery]:
    """Deterministic hint-bearing queries over the blade fixture."""
    hint_names = sorted(ABLATION_HINT_TOOLS)
    queries = []
    for i in range(n_queries):
        first = hint_names[i % len(hint_names)]
        second = hint_names[(i + 1 + i // len(hint_names)) % len(hint_names)]
        hints = (first, second) if first != second else (first,)
        lo = 2 + (i % 3)
        hi = 10 + (i % 6)
        prompt = (f"q-{i:03d}: report {' and '.join(hints)} metrics "
                  f"for parts {lo} to {hi}")
        queries.append(AblationQuery(
            id=f"q-{i:03d}", prompt=prompt,
            required_tools=tuple(ABLATION_HINT_TOOLS[h] for h in hints),
            hints=hints))
    return queries


def run_critic_ablation(queries, make_engine, drop_p: float = 0.3,
                        seed: int = 7) -> tuple[list[PairedTrial], CriticValue]:
    """Execute every query under critic and no-critic conditions with the
    same deterministic degradation and score both runs.

    ``queries`` supply id, prompt, required tool names, and hint words that
    the degrader may remove from the routed instruction; ``make_engine``
    builds a fresh engine per (query, condition) so trials are isolated.
    """
    import dataclasses

    trials: list[PairedTrial] = []
    for query in queries:
        dropped = degrade_routing(query.id, list(query.hints), drop_p, seed)

        def transform(decision, dropped=dropped):
            degraded = decision.instruction
            for hint in sorted(dropped):
                degraded = degraded.replace(hint, " ")
            degraded = " ".join(degraded.split())
            return dataclasses.replace(decision, instruction=degraded or "analyze")

        for condition in ("critic", "no-critic"):
            engine = make_engine(critic_enabled=condition == "critic")
            session_id = engine.new_session()
            result = engine.turn(session_id, query.prompt, routing_transform=transform)
            score = score_tool_selection(list(query.required_tools), result.called_tools)
            trials.append(PairedTrial(
                query_id=query.id, condition=condition,
                dropped_hints=sorted(dropped), called_tools=result.called_tools,
                precision=score.precision, recall=score.recall, f1=score.f1,
                missing_count=score.missing))
    return trials, critic_value_metrics(trials)
