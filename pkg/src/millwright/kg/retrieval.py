"""Embedding-scored retrieval with an adaptive inclusion floor.

Candidates are pre-pooled by base triple similarity, rescored with a
context-weighted combined score, admitted by the data-adaptive floor
tau = mu + z*sigma (population sigma over the pool), bounded within
[k_lo, k_hi] with a flagged top-k0 fallback, and optionally grown by a
bounded breadth expansion over shared-entity adjacency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from millwright.errors import ConfigurationError, MillwrightError
from millwright.kg.embedding import Embedder
from millwright.kg.store import TripleStore


@dataclass
class RetrievalConfig:
    lam: float = 0.5          # context-alignment weight in the combined score
    alpha: float = 0.2        # pre-pool pruning fraction
    min_pool: int = 20
    z: float = 0.5
    k0: int = 5
    k_lo: int = 3
    k_hi: int = 15
    depth: int = 1
    beam: int = 5

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"lambda must be in [0,1], got {self.lam}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must be in (0,1], got {self.alpha}")
        if self.min_pool < 1:
            raise ConfigurationError("min_pool must be >= 1")
        if self.k_lo > self.k_hi:
            raise ConfigurationError(f"k_lo {self.k_lo} exceeds k_hi {self.k_hi}")
        if self.depth < 0 or self.beam < 1:
            raise ConfigurationError("depth must be >= 0 and beam >= 1")


@dataclass
class RetrievalResult:
    selected: list[tuple[str, float]]
    expanded: list[tuple[str, int]]
    tau: float
    pool_size: int
    fallback: bool
    empty_knowledge: bool = False

    def selected_ids(self) -> list[str]:
        return [i for i, _ in self.selected]

    def all_ids(self) -> list[str]:
        return self.selected_ids() + [i for i, _ in self.expanded]


def pool_size(n_items: int, alpha: float, min_pool: int) -> int:
    return min(n_items, max(min_pool, math.floor(alpha * n_items)))


def score(query_text: str, config: RetrievalConfig, embedder: Embedder,
          store: TripleStore) -> tuple[list[tuple[str, float]], dict[str, float]]:
    """Combined scores for the pre-pool plus base similarities for everything.

    Pool membership is decided by base triple similarity; the combined score
    adds lambda-weighted context similarity for pooled items only.
    """
    if len(store) == 0:
        raise MillwrightError("cannot score against an empty store")
    q = embedder.embed(query_text)
    base = store.v_matrix @ q
    context = store.u_matrix @ q
    base_sims = {store.records[i].id: float(base[i]) for i in range(len(store))}
    p = pool_size(len(store), config.alpha, config.min_pool)
    order = sorted(range(len(store)),
                   key=lambda i: (-base[i], store.records[i].id))
    pooled = order[:p]
    scored = [(store.records[i].id, float(base[i] + config.lam * context[i]))
              for i in pooled]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored, base_sims


def select_candidates(scored: list[tuple[str, float]],
                      config: RetrievalConfig) -> RetrievalResult:
    """Adaptive-floor selection over combined scores.

    Invariant under positive affine transforms of the scores: mu, sigma, and
    tau transform covariantly, and ties break on id.
    """
    if not scored:
        raise MillwrightError("select_candidates requires a non-empty scored pool")
    values = np.array([s for _, s in scored], dtype=float)
    mu = float(values.mean())
    sigma = float(values.std())  # population divisor
    tau = mu + config.z * sigma
    ordered = sorted(scored, key=lambda item: (-item[1], item[0]))
    above = [item for item in ordered if item[1] >= tau]
    fallback = not above
    chosen = ordered[:config.k0] if fallback else above
    chosen = chosen[:config.k_hi]
    if len(chosen) < config.k_lo:
        have = {i for i, _ in chosen}
        for item in ordered:
            if len(chosen) >= config.k_lo:
                break
            if item[0] not in have:
                chosen.append(item)
                have.add(item[0])
    return RetrievalResult(selected=chosen, expanded=[], tau=tau,
                           pool_size=len(scored), fallback=fallback)


def expand(seed_ids: list[str], base_sims: dict[str, float],
           config: RetrievalConfig, store: TripleStore) -> list[tuple[str, int]]:
    """Breadth-bounded expansion over shared-entity adjacency.

    Per depth, unvisited neighbors of the frontier are ranked by base
    similarity and cut to the beam width; a visited set prevents revisits.
    Expanded triples keep hop-based ordering and are not re-scored.
    """
    visited = {store.index_of(i) for i in seed_ids if i in store}
    frontier = set(visited)
    expanded: list[tuple[str, int]] = []
    for hop in range(1, config.depth + 1):
        candidates: set[int] = set()
        for index in frontier:
            candidates |= store.neighbors(index)
        candidates -= visited
        if not candidates:
            break
        ranked = sorted(candidates,
                        key=lambda i: (-base_sims.get(store.records[i].id, 0.0),
                                       store.records[i].id))
        take = ranked[:config.beam]
        for index in take:
            expanded.append((store.records[index].id, hop))
        visited |= set(take)
        frontier = set(take)
    return expanded


def retrieve(query_text: str, config: RetrievalConfig, embedder: Embedder,
             store: TripleStore) -> RetrievalResult:
    """Full retrieval: score, adaptive-floor select, bounded expansion."""
    if len(store) == 0:
        return RetrievalResult(selected=[], expanded=[], tau=0.0, pool_size=0,
                               fallback=False, empty_knowledge=True)
    scored, base_sims = score(query_text, config, embedder, store)
    result = select_candidates(scored, config)
    result.expanded = expand(result.selected_ids(), base_sims, config, store)
    return result
