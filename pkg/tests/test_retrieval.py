from __future__ import annotations

import hashlib
import math

import numpy as np
import pytest

from millwright.errors import ConfigurationError, MillwrightError
from millwright.fixtures import write_seed_tsvs
from millwright.kg.embedding import HashedEmbedder
from millwright.kg.retrieval import (
    RetrievalConfig,
    expand,
    pool_size,
    retrieve,
    score,
    select_candidates,
)
from millwright.kg.store import TripleStore

from .oracles import selection_oracle


@pytest.fixture
def embedder():
    return HashedEmbedder(dim=64)


@pytest.fixture
def seeded_store(tmp_path, embedder):
    store = TripleStore(embedder)
    for path in write_seed_tsvs(tmp_path / "seed"):
        store.ingest_tsv(path)
    return store


def chain_store(embedder, lines):
    store = TripleStore(embedder)
    from millwright.kg.builder import parse_triples
    drafts, _ = parse_triples("".join(line + "\n" for line in lines))
    for i, draft in enumerate(drafts):
        store.add_draft(draft, "chain", i)
    return store


class TestConfig:
    def test_defaults_valid(self):
        RetrievalConfig()

    @pytest.mark.parametrize("kwargs", [
        {"lam": 1.5}, {"alpha": 0.0}, {"min_pool": 0},
        {"k_lo": 9, "k_hi": 3}, {"depth": -1}, {"beam": 0},
    ])
    def test_knob_validation(self, kwargs):
        with pytest.raises(ConfigurationError):
            RetrievalConfig(**kwargs)


class TestPoolSize:
    def test_small_store_fully_pooled(self):
        assert pool_size(10, alpha=0.2, min_pool=20) == 10

    def test_large_store_alpha_fraction(self):
        assert pool_size(1000, alpha=0.2, min_pool=20) == 200

    def test_floor_dominates(self):
        assert pool_size(100, alpha=0.05, min_pool=20) == 20


class TestScore:
    def test_lambda_zero_equals_base(self, seeded_store, embedder):
        config = RetrievalConfig(lam=0.0)
        scored, base = score("tool wear", config, embedder, seeded_store)
        for triple_id, s in scored:
            assert s == pytest.approx(base[triple_id], abs=1e-12)

    def test_empty_store_rejected(self, embedder):
        with pytest.raises(MillwrightError):
            score("x", RetrievalConfig(), embedder, TripleStore(embedder))


class TestSelect:
    def test_hand_computed_tau(self):
        scored = [("a", 1.0), ("b", 0.5), ("c", 0.0)]
        config = RetrievalConfig(z=0.5, k_lo=1, k_hi=15)
        result = select_candidates(scored, config)
        sigma = math.sqrt(1.0 / 6.0)
        assert result.tau == pytest.approx(0.5 + 0.5 * sigma, abs=1e-9)
        assert result.tau == pytest.approx(0.7041, abs=1e-4)
        assert result.selected == [("a", 1.0)]
        assert not result.fallback

    def test_pad_to_k_lo(self):
        scored = [("a", 1.0), ("b", 0.5), ("c", 0.0)]
        result = select_candidates(scored, RetrievalConfig(z=0.5, k_lo=2, k_hi=15))
        assert result.selected_ids() == ["a", "b"]

    def test_equal_scores_selects_all_to_cap(self):
        scored = [(f"t{i:02d}", 0.7) for i in range(20)]
        result = select_candidates(scored, RetrievalConfig(z=0.5, k_lo=3, k_hi=15))
        assert result.tau == pytest.approx(0.7)
        assert len(result.selected) == 15
        assert not result.fallback

    def test_fallback_flag(self):
        # huge z forces an empty floor set
        scored = [("a", 1.0), ("b", 0.5), ("c", 0.0)]
        result = select_candidates(scored, RetrievalConfig(z=50.0, k0=2, k_lo=1, k_hi=15))
        assert result.fallback
        assert result.selected_ids() == ["a", "b"]

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(17)
        for trial in range(50):
            n = int(rng.integers(3, 40))
            scored = [(f"t{i:03d}", float(rng.normal())) for i in range(n)]
            z = float(rng.uniform(-1, 2))
            k_lo = int(rng.integers(1, 4))
            k_hi = int(rng.integers(k_lo, k_lo + 12))
            k0 = int(rng.integers(1, 6))
            config = RetrievalConfig(z=z, k0=k0, k_lo=k_lo, k_hi=k_hi)
            result = select_candidates(scored, config)
            ids, tau, fallback = selection_oracle(scored, z, k0, k_lo, k_hi)
            assert result.selected_ids() == ids
            assert result.tau == pytest.approx(tau, abs=1e-9)
            assert result.fallback == fallback

    def test_affine_invariance(self):
        rng = np.random.default_rng(23)
        scored = [(f"t{i:03d}", float(rng.normal())) for i in range(30)]
        config = RetrievalConfig(z=0.8, k_lo=3, k_hi=10)
        baseline = select_candidates(scored, config).selected_ids()
        for a, b in [(2.0, 0.0), (0.5, 3.0), (10.0, -1.0)]:
            transformed = [(i, a * s + b) for i, s in scored]
            assert select_candidates(transformed, config).selected_ids() == baseline


class TestExpand:
    def test_depth_zero(self, embedder):
        store = chain_store(embedder, ['A\tREL\tB\t"x"\t', 'B\tREL\tC\t"y"\t'])
        base = {r.id: 0.5 for r in store.records}
        assert expand([store.records[0].id], base,
                      RetrievalConfig(depth=0), store) == []

    def test_chain_one_hop(self, embedder):
        store = chain_store(embedder, ['A\tREL\tB\t"x"\t', 'B\tREL\tC\t"y"\t'])
        base = {r.id: 0.5 for r in store.records}
        expanded = expand([store.records[0].id], base,
                          RetrievalConfig(depth=1, beam=5), store)
        assert (store.records[1].id, 1) in expanded

    def test_cycle_visited_once(self, embedder):
        store = chain_store(embedder, ['A\tREL\tB\t"x"\t', 'B\tREL\tA\t"y"\t'])
        base = {r.id: 0.5 for r in store.records}
        expanded = expand([store.records[0].id], base,
                          RetrievalConfig(depth=3, beam=5), store)
        ids = [i for i, _ in expanded]
        assert len(ids) == len(set(ids))

    def test_beam_bound(self, embedder):
        lines = ['HUB\tREL\tX%d\t"c%d"\t' % (i, i) for i in range(10)]
        store = chain_store(embedder, lines)
        base = {r.id: float(i) for i, r in enumerate(store.records)}
        expanded = expand([store.records[0].id], base,
                          RetrievalConfig(depth=1, beam=3), store)
        assert len(expanded) == 3
        # beam keeps the highest base similarities
        assert all(base[i] >= 7.0 for i, _ in expanded)


class TestRetrieve:
    def test_topical_query_hits_owning_document(self, seeded_store, embedder):
        config = RetrievalConfig(k_lo=3, k_hi=3, depth=0)
        result = retrieve("what causes blade deformation and profile error "
                          "in thin-walled cantilever machining",
                          config, embedder, seeded_store)
        docs = [seeded_store.get(i).source_doc for i in result.selected_ids()[:3]]
        assert docs.count("blade_deformation") == 3

    def test_empty_store_signal(self, embedder):
        result = retrieve("anything", RetrievalConfig(), embedder, TripleStore(embedder))
        assert result.empty_knowledge
        assert result.selected == []

    def test_repeat_query_identical_digest(self, seeded_store, embedder):
        config = RetrievalConfig()

        def run_digest():
            result = retrieve("tool wear drift", config, embedder, seeded_store)
            blob = repr((result.selected, result.expanded, result.tau, result.pool_size))
            return hashlib.sha256(blob.encode()).hexdigest()

        assert run_digest() == run_digest()

    def test_bounds_always_hold(self, seeded_store, embedder):
        rng = np.random.default_rng(5)
        for _ in range(25):
            k_lo = int(rng.integers(1, 4))
            config = RetrievalConfig(
                z=float(rng.uniform(-0.5, 3.0)), k_lo=k_lo,
                k_hi=int(rng.integers(k_lo, 12)), depth=int(rng.integers(0, 3)))
            result = retrieve("cutting speed", config, embedder, seeded_store)
            assert config.k_lo <= len(result.selected) <= config.k_hi
            expansion_cap = sum(config.beam ** d for d in range(1, config.depth + 1))
            assert len(result.expanded) <= expansion_cap
