import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from biaslens import corpus, retrieval
from biaslens.errors import (
    DimMismatch,
    EmptyCandidateSet,
    MultiVectorUnsupported,
    ZeroVectorWithCosine,
)
from conftest import record, single

COSINE = retrieval.ScorerConfig("cosine")
DOT = retrieval.ScorerConfig("dot")
MAXSIM = retrieval.ScorerConfig("maxsim")


def candidate_set(vectors):
    return corpus.EmbeddingSet([single(f"d{i:03d}", v) for i, v in enumerate(vectors)])


class TestScore:
    def test_cosine_identical_unit_vectors(self):
        assert retrieval.score(single("q", [1, 0]), single("d", [1, 0]), COSINE) == 1.0

    def test_cosine_closed_form(self):
        value = retrieval.score(single("q", [1, 1]), single("d", [1, 0]), COSINE)
        assert value == pytest.approx(0.70711, abs=1e-5)
        assert value == pytest.approx(oracles.cosine([1, 1], [1, 0]), abs=1e-9)

    def test_maxsim_two_token_hand_case(self):
        q = record("q", [[1, 0], [0, 1]])
        d = record("d", [[1, 0]])
        assert retrieval.score(q, d, MAXSIM) == pytest.approx(1.0)

    def test_maxsim_matches_scalar_oracle(self):
        rng = np.random.default_rng(5)
        q = record("q", rng.normal(size=(3, 6)))
        d = record("d", rng.normal(size=(4, 6)))
        expected = oracles.maxsim(q.vectors.tolist(), d.vectors.tolist())
        assert retrieval.score(q, d, MAXSIM) == pytest.approx(expected, abs=1e-6)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            retrieval.score(single("q", [1, 0]), single("d", [1, 0, 0]), COSINE)

    def test_zero_vector_under_cosine(self):
        with pytest.raises(ZeroVectorWithCosine, match="'d'"):
            retrieval.score(single("q", [1, 0]), single("d", [0, 0]), COSINE)

    def test_multi_vector_rejected_for_cosine(self):
        with pytest.raises(MultiVectorUnsupported):
            retrieval.score(record("q", [[1, 0], [0, 1]]), single("d", [1, 0]), COSINE)

    def test_cosine_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            u, v = rng.normal(size=(2, 5))
            value = retrieval.score(single("q", u), single("d", v), COSINE)
            assert -1.0 <= value <= 1.0


class TestTopK:
    def test_k_exceeding_pool_returns_full_sorted_list(self):
        cands = candidate_set([[1, 0], [0, 1], [-1, 0]])
        ranked = retrieval.top_k(single("q", [1, 0]), cands, k=10, cfg=COSINE)
        assert ranked.doc_ids() == ["d000", "d001", "d002"]
        scores = [s for _, s in ranked.entries]
        assert scores == sorted(scores, reverse=True)

    def test_tie_broken_by_doc_id(self):
        cands = corpus.EmbeddingSet([single("zeta", [1, 0]), single("alpha", [1, 0])])
        ranked = retrieval.top_k(single("q", [1, 0]), cands, k=2, cfg=COSINE)
        assert ranked.doc_ids() == ["alpha", "zeta"]

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(42)
        vectors = rng.normal(size=(5, 8))
        cands = candidate_set(vectors)
        query = single("q", rng.normal(size=8))
        ranked = retrieval.top_k(query, cands, k=3, cfg=COSINE)
        scored = sorted(
            ((-oracles.cosine(query.vectors[0].tolist(), v.tolist()), f"d{i:03d}")
             for i, v in enumerate(vectors)))
        assert ranked.doc_ids() == [doc for _, doc in scored[:3]]

    def test_truncation_consistency(self):
        rng = np.random.default_rng(7)
        cands = candidate_set(rng.normal(size=(12, 4)))
        query = single("q", rng.normal(size=4))
        full = retrieval.top_k(query, cands, k=12, cfg=COSINE)
        for j in (1, 3, 7, 12):
            assert retrieval.top_k(query, cands, k=j, cfg=COSINE).entries == full.entries[:j]

    def test_empty_candidates(self):
        with pytest.raises(EmptyCandidateSet):
            retrieval.top_k(single("q", [1.0]), corpus.EmbeddingSet([], dim=1), 1, COSINE)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.1, 100.0))
    def test_cosine_ranking_scale_invariant(self, seed, scale):
        rng = np.random.default_rng(seed)
        vectors = rng.normal(size=(6, 4))
        query = single("q", rng.normal(size=4))
        base = retrieval.top_k(query, candidate_set(vectors), 6, COSINE)
        scaled = retrieval.top_k(query, candidate_set(vectors * scale), 6, COSINE)
        assert base.doc_ids() == scaled.doc_ids()

    def test_insertion_order_never_matters(self):
        rng = np.random.default_rng(3)
        vectors = list(rng.normal(size=(8, 4)))
        query = single("q", rng.normal(size=4))
        records = [single(f"d{i:03d}", v) for i, v in enumerate(vectors)]
        base = retrieval.top_k(query, corpus.EmbeddingSet(records), 8, COSINE)
        for perm_seed in range(4):
            perm = np.random.default_rng(perm_seed).permutation(len(records))
            shuffled = corpus.EmbeddingSet([records[i] for i in perm])
            assert retrieval.top_k(query, shuffled, 8, COSINE).entries == base.entries


class TestMaxSimProperties:
    def test_single_vector_maxsim_equals_dot(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            u, v = rng.normal(size=(2, 6))
            q, d = single("q", u), single("d", v)
            assert retrieval.score(q, d, MAXSIM) == pytest.approx(
                retrieval.score(q, d, DOT), abs=1e-9)

    def test_inner_cosine_variant(self):
        rng = np.random.default_rng(13)
        q = record("q", rng.normal(size=(2, 4)))
        d = record("d", rng.normal(size=(3, 4)))
        cfg = retrieval.ScorerConfig("maxsim", maxsim_inner="cosine")
        expected = sum(
            max(oracles.cosine(list(qv), list(dv)) for dv in d.vectors.tolist())
            for qv in q.vectors.tolist())
        assert retrieval.score(q, d, cfg) == pytest.approx(expected, abs=1e-6)


class TestBuildRun:
    def annotated(self, n, dim, seed, prefix):
        rng = np.random.default_rng(seed)
        records = [single(f"{prefix}{i:03d}", rng.normal(size=dim)) for i in range(n)]
        metas = [corpus.ItemMeta(r.id, "en", "USA") for r in records]
        return corpus.join_meta(corpus.EmbeddingSet(records), metas)

    def test_single_query_single_candidate(self):
        run = retrieval.build_run(self.annotated(1, 4, 0, "q"),
                                  self.annotated(1, 4, 1, "d"), 5, COSINE)
        assert len(run.lists) == 1
        assert len(run.lists[0].entries) == 1

    def test_deterministic_across_invocations_and_threads(self, tmp_path):
        queries = self.annotated(6, 8, 2, "q")
        candidates = self.annotated(40, 8, 3, "d")
        paths = []
        for i, threads in enumerate((None, 1, 4)):
            run = retrieval.build_run(queries, candidates, 10, COSINE, threads=threads)
            path = tmp_path / f"run{i}.tsv"
            retrieval.write_run(run, path)
            paths.append(path.read_bytes())
        assert paths[0] == paths[1] == paths[2]

    def test_every_list_matches_top_k_oracle(self):
        queries = self.annotated(10, 8, 4, "q")
        candidates = self.annotated(100, 8, 5, "d")
        run = retrieval.build_run(queries, candidates, 7, COSINE)
        for ranked in run.lists:
            expected = retrieval.top_k(queries.record(ranked.query_id), candidates, 7, COSINE)
            assert ranked == expected

    def test_run_file_round_trip(self, tmp_path):
        run = retrieval.build_run(self.annotated(3, 4, 6, "q"),
                                  self.annotated(9, 4, 7, "d"), 4, COSINE)
        path = tmp_path / "run.tsv"
        retrieval.write_run(run, path)
        loaded = retrieval.load_run(path)
        assert [l.query_id for l in loaded.lists] == [l.query_id for l in run.lists]
        for got, want in zip(loaded.lists, run.lists):
            assert got.doc_ids() == want.doc_ids()
            for (_, gs), (_, ws) in zip(got.entries, want.entries):
                assert gs == pytest.approx(ws, abs=1e-6)


class TestScoreTriplet:
    def test_hand_case(self):
        scores = retrieval.score_triplet(
            single("q", [1, 0]), single("s", [1, 0]), single("c", [0, 1]),
            single("n", [-1, 0]), COSINE)
        assert (scores.s_sem, scores.s_cul, scores.s_non) == (1.0, 0.0, -1.0)

    def test_identical_candidates_tie(self):
        scores = retrieval.score_triplet(
            single("q", [1, 2]), single("s", [2, 1]), single("c", [2, 1]),
            single("n", [2, 1]), COSINE)
        assert scores.s_sem == scores.s_cul == scores.s_non

    def test_matches_three_score_calls(self):
        rng = np.random.default_rng(17)
        q, s, c, n = (single(name, rng.normal(size=16))
                      for name in ("q", "s", "c", "n"))
        scores = retrieval.score_triplet(q, s, c, n, COSINE)
        assert scores.s_sem == retrieval.score(q, s, COSINE)
        assert scores.s_cul == retrieval.score(q, c, COSINE)
        assert scores.s_non == retrieval.score(q, n, COSINE)
