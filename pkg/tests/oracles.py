"""Independent oracles used by the test suite.

Each oracle deliberately avoids the code path it checks: the drift oracle
solves the normal equations with numpy's generic lstsq instead of the
closed-form estimator, and the statistics oracles are naive two-pass loops.
"""

from __future__ import annotations

import math

import numpy as np


def drift_fit_oracle(ns, us):
    """Solve u = c + b(n-1) by generic least squares on the design matrix."""
    ns = np.asarray(ns, dtype=float)
    us = np.asarray(us, dtype=float)
    design = np.column_stack([np.ones_like(ns), ns - 1.0])
    coef, *_ = np.linalg.lstsq(design, us, rcond=None)
    c, b = float(coef[0]), float(coef[1])
    residuals = us - (c + b * (ns - 1.0))
    return b, c, residuals


def sse(ns, us, b, c):
    ns = np.asarray(ns, dtype=float)
    us = np.asarray(us, dtype=float)
    return float(np.sum((us - (c + b * (ns - 1.0))) ** 2))


def two_pass_mean(values):
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def two_pass_std(values):
    m = two_pass_mean(values)
    acc = 0.0
    for v in values:
        acc += (v - m) ** 2
    return math.sqrt(acc / (len(values) - 1))


def selection_oracle(scored, z, k0, k_lo, k_hi):
    """Brute-force re-statement of the adaptive-floor selection rule."""
    scores = [s for _, s in scored]
    mu = two_pass_mean(scores)
    sigma = math.sqrt(two_pass_mean([(s - mu) ** 2 for s in scores]))
    tau = mu + z * sigma
    ordered = sorted(scored, key=lambda item: (-item[1], item[0]))
    above = [item for item in ordered if item[1] >= tau]
    fallback = not above
    if fallback:
        chosen = ordered[:k0]
    else:
        chosen = above
    chosen = chosen[:k_hi]
    if len(chosen) < k_lo:
        have = {i for i, _ in chosen}
        for item in ordered:
            if len(chosen) >= k_lo:
                break
            if item[0] not in have:
                chosen.append(item)
                have.add(item[0])
    return [i for i, _ in chosen], tau, fallback


def precision_recall_f1(required, called):
    required = set(required)
    called = set(called)
    if not called:
        precision = 1.0 if not required else 0.0
    else:
        precision = len(required & called) / len(called)
    if not required:
        recall = 1.0
    else:
        recall = len(required & called) / len(required)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    missing = len(required - called)
    return precision, recall, f1, missing
