"""Deterministic entity extraction from natural-language queries.

Grammar matches the interaction phrasing the engine supports: part windows
("parts 4 to 16", "parts 4-16", "part 7"), pair keys ("2+17"), quoted or
bare file paths, and the reset keyword.
"""

from __future__ import annotations

import re

_RANGE = re.compile(r"\bparts?\s+(\d+)\s*(?:to|-|–|through)\s*(\d+)", re.IGNORECASE)
_SINGLE = re.compile(r"\bpart\s+(\d+)\b", re.IGNORECASE)
_PAIR = re.compile(r"\b(\d+)\+(\d+)\b")
_QUOTED_PATH = re.compile(r"['\"]([^'\"]+)['\"]")
_BARE_PATH = re.compile(r"(?<![\w'\"])((?:\.{1,2}/|/)[\w./-]+)")
_RESET = re.compile(r"\breset\b", re.IGNORECASE)


def extract_part_range(text: str) -> tuple[int, int] | None:
    match = _RANGE.search(text)
    if match:
        lo, hi = int(match.group(1)), int(match.group(2))
        return (lo, hi) if lo <= hi else (hi, lo)
    match = _SINGLE.search(text)
    if match:
        n = int(match.group(1))
        return (n, n)
    return None


def extract_pair_keys(text: str) -> list[str]:
    return [f"{a}+{b}" for a, b in _PAIR.findall(text)]


def extract_file_paths(text: str) -> list[str]:
    paths: list[str] = []
    quoted_spans: list[tuple[int, int]] = []
    for match in _QUOTED_PATH.finditer(text):
        candidate = match.group(1)
        if "/" in candidate or candidate.endswith(".csv"):
            paths.append(candidate)
            quoted_spans.append(match.span())
    for match in _BARE_PATH.finditer(text):
        inside_quote = any(lo <= match.start() < hi for lo, hi in quoted_spans)
        if not inside_quote and match.group(1) not in paths:
            paths.append(match.group(1))
    return paths


def has_reset(text: str) -> bool:
    return _RESET.search(text) is not None


ANALYSIS_KEYWORDS = ("compensation", "offset", "drift", "wear", "deviation",
                     "average", "std")
KG_KEYWORDS = ("cause", "why", "explain", "best practice", "recommendation",
               "constraint")

# metric vocabulary -> (quantity-id prefix, owning tool)
METRIC_TOOLS = {
    "average": ("avg", "rb_compute_average"),
    "mean": ("avg", "rb_compute_average"),
    "std": ("std", "rb_compute_std_dev"),
    "drift": ("w_d", "rb_compute_wear_drift"),
    "wear": ("w_d", "rb_compute_wear_drift"),
    "variability": ("w_v", "rb_compute_process_variability"),
    "instability": ("w_v", "rb_compute_process_variability"),
    "residual": ("c", "rb_compute_residual_systematic"),
    "compliance": ("c", "rb_compute_residual_systematic"),
    "attribution": ("phi_p", "rb_compute_attribution_fractions"),
    "fraction": ("phi_p", "rb_compute_attribution_fractions"),
    "compensation": ("Trc", "rb_compute_pair_tool_comp"),
    "offset": ("Trc", "rb_compute_pair_tool_comp"),
    "pathing": ("p", "rb_compute_pathing_dev"),
}


def requested_metrics(text: str) -> list[tuple[str, str]]:
    """Ordered unique (quantity prefix, tool) pairs the query asks about."""
    lowered = text.lower()
    seen: dict[tuple[str, str], None] = {}
    for word, target in METRIC_TOOLS.items():
        if word in lowered:
            seen.setdefault(target, None)
    return list(seen)


def keyword_route(text: str) -> tuple[int, int]:
    """(analysis hits, kg hits) under the fallback keyword table."""
    lowered = text.lower()
    analysis_hits = sum(1 for w in ANALYSIS_KEYWORDS if w in lowered)
    kg_hits = sum(1 for w in KG_KEYWORDS if w in lowered)
    return analysis_hits, kg_hits
