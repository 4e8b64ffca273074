"""Knowledge QA scoring: open answers against numeric targets and required
terms, multiple-choice generation with seeded out-of-tolerance distractors,
and per-question timing.
"""

from __future__ import annotations

import random
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from millwright.errors import MillwrightError

_NUMBER = re.compile(r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?")
_OPTION = re.compile(r"\b([A-D])\b")

# factors applied to inch-denominated targets when a unit token follows a number
UNIT_FACTORS = {
    "in": {"in": 1.0, "inch": 1.0, "inches": 1.0, "mil": 1e-3, "mils": 1e-3,
           "thou": 1e-3, "uin": 1e-6, "µin": 1e-6, "microinch": 1e-6},
}

PERTURB_FACTORS = (0.10, -0.10, 0.25, -0.25, 0.50, -0.50)


@dataclass(frozen=True)
class NumericTarget:
    value: float
    tolerance: float
    unit: str = ""


@dataclass
class QAItem:
    id: str
    format: str  # "open" | "mcq"
    prompt: str
    numeric_targets: list[NumericTarget] = field(default_factory=list)
    required_terms: list[str] = field(default_factory=list)
    options: list[str] = field(default_factory=list)
    correct_index: int = -1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.format not in ("open", "mcq"):
            raise MillwrightError(f"{self.id}: unknown format {self.format!r}")
        if self.format == "mcq" and not 0 <= self.correct_index < len(self.options):
            raise MillwrightError(f"{self.id}: mcq needs options and a correct index")


def extract_numbers(text: str, unit: str = "") -> list[float]:
    """Numbers with unit-aware normalization into the target unit family."""
    factors = UNIT_FACTORS.get(unit, {})
    values = []
    for match in _NUMBER.finditer(text):
        value = float(match.group(0))
        tail = text[match.end():match.end() + 12].strip().lower()
        unit_token = re.match(r"([a-zµ]+)", tail)
        if unit_token and unit_token.group(1) in factors:
            value *= factors[unit_token.group(1)]
        values.append(value)
    return values


@dataclass
class QAScore:
    score: float
    correct: bool | None = None
    matched_targets: int = 0
    matched_terms: int = 0


def score_qa(item: QAItem, answer: str) -> QAScore:
    """Open: half weight on in-tolerance numeric targets, half on required
    terms (case-folded). MCQ: exact option match."""
    if not isinstance(answer, str) or not answer.strip():
        return QAScore(score=0.0, correct=False if item.format == "mcq" else None)
    if item.format == "mcq":
        correct = _mcq_correct(item, answer)
        return QAScore(score=1.0 if correct else 0.0, correct=correct)
    target_hits = 0
    for target in item.numeric_targets:
        numbers = extract_numbers(answer, target.unit)
        if any(abs(x - target.value) <= target.tolerance for x in numbers):
            target_hits += 1
    folded = answer.casefold()
    term_hits = sum(1 for term in item.required_terms if term.casefold() in folded)
    parts = []
    if item.numeric_targets:
        parts.append(target_hits / len(item.numeric_targets))
    if item.required_terms:
        parts.append(term_hits / len(item.required_terms))
    score = sum(0.5 * p for p in parts) if len(parts) == 2 else (parts[0] if parts else 0.0)
    return QAScore(score=score, matched_targets=target_hits, matched_terms=term_hits)


def _mcq_correct(item: QAItem, answer: str) -> bool:
    stripped = answer.strip()
    letters = _OPTION.findall(stripped)
    if letters:
        return ord(letters[0]) - ord("A") == item.correct_index
    return stripped.casefold() == item.options[item.correct_index].casefold()


@dataclass
class McqSkip:
    item_id: str
    reason: str


def generate_mcq(item: QAItem, seed: int) -> QAItem | McqSkip:
    """Convert an open item into MCQ: one correct option plus three seeded
    perturbation distractors pushed outward until outside tolerance."""
    if not item.numeric_targets:
        raise MillwrightError(f"{item.id}: mcq generation needs a numeric target")
    target = item.numeric_targets[0]
    if target.value == 0.0:
        return McqSkip(item.id, "zero target cannot escape its tolerance multiplicatively")
    base_outside = [f for f in PERTURB_FACTORS
                    if abs(target.value * f) > target.tolerance]
    if not base_outside:
        return McqSkip(item.id, "tolerance covers every base perturbation")
    rng = random.Random(seed)
    factors = list(PERTURB_FACTORS)
    rng.shuffle(factors)
    distractors: list[float] = []
    for factor in factors:
        if len(distractors) == 3:
            break
        candidate = target.value * (1.0 + factor)
        while abs(candidate - target.value) <= target.tolerance or any(
                abs(candidate - other) <= target.tolerance for other in distractors):
            factor *= 2.0
            candidate = target.value * (1.0 + factor)
        distractors.append(candidate)
    options = [_format_value(target.value)] + [_format_value(d) for d in distractors]
    order = list(range(4))
    rng.shuffle(order)
    shuffled = [options[i] for i in order]
    return QAItem(
        id=f"{item.id}-mcq", format="mcq", prompt=item.prompt,
        numeric_targets=item.numeric_targets, required_terms=item.required_terms,
        options=shuffled, correct_index=order.index(0), seed=seed)


def _format_value(value: float) -> str:
    return f"{value:.6g}"


@dataclass
class QAReport:
    mean_score: float
    mean_elapsed_s: float
    records: list[dict]

    def write_csv(self, path: str | Path) -> None:
        lines = ["id,format,score,elapsed_s"]
        for record in self.records:
            lines.append(f"{record['id']},{record['format']},"
                         f"{record['score']:.4f},{record['elapsed_s']:.6f}")
        lines.append(f"mean,,{self.mean_score:.4f},{self.mean_elapsed_s:.6f}")
        Path(path).write_text("\n".join(lines) + "\n")


def run_qa(items: list[QAItem], answer_fn) -> QAReport:
    """Score answer_fn over the bank, recording wall time per question."""
    records = []
    for item in items:
        started = time.perf_counter()
        try:
            answer = answer_fn(item)
        except Exception as exc:  # noqa: BLE001 - unparseable answers score 0, logged
            records.append({"id": item.id, "format": item.format, "score": 0.0,
                            "elapsed_s": time.perf_counter() - started,
                            "error": str(exc)})
            continue
        elapsed = time.perf_counter() - started
        outcome = score_qa(item, answer)
        records.append({"id": item.id, "format": item.format, "score": outcome.score,
                        "elapsed_s": elapsed})
    mean_score = sum(r["score"] for r in records) / len(records) if records else 0.0
    mean_elapsed = sum(r["elapsed_s"] for r in records) / len(records) if records else 0.0
    return QAReport(mean_score=mean_score, mean_elapsed_s=mean_elapsed, records=records)
