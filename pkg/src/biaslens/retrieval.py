"""Exact brute-force scoring and ranked-list construction.

Single-vector records are scored with cosine or dot product; multi-vector
records with late-interaction MaxSim (sum over query tokens of the best
token-level similarity). No ANN shortcuts: evaluation integrity beats
speed at benchmark scale. Ranking ties break by ascending doc_id so runs
are reproducible bit for bit.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .corpus import AnnotatedSet, EmbeddingRecord, EmbeddingSet
from .errors import (
    DimMismatch,
    EmptyCandidateSet,
    FormatError,
    MultiVectorUnsupported,
    ZeroVectorWithCosine,
)

SIMILARITIES = ("cosine", "dot", "maxsim")


@dataclass(frozen=True)
class ScorerConfig:
    """How query/candidate pairs are scored.

    maxsim_inner picks the token-level similarity inside MaxSim; the
    default follows the late-interaction convention of dot products over
    l2-normalized token vectors.
    """

    similarity: str = "cosine"
    l2_normalize_inputs: bool = False
    maxsim_inner: str = "dot"

    def __post_init__(self):
        if self.similarity not in SIMILARITIES:
            raise ValueError(f"unknown similarity {self.similarity!r}")
        if self.maxsim_inner not in ("dot", "cosine"):
            raise ValueError(f"unknown maxsim_inner {self.maxsim_inner!r}")


@dataclass(frozen=True)
class RankedList:
    """One query's candidates, best first; rank i is entries[i-1]."""

    query_id: str
    entries: tuple[tuple[str, float], ...]

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]


@dataclass(frozen=True)
class RunFile:
    lists: tuple[RankedList, ...]
    k: int


@dataclass(frozen=True)
class TripletScores:
    """Similarity of one query against its three candidate types."""

    query_id: str
    s_sem: float
    s_cul: float
    s_non: float


def _single_vector(record: EmbeddingRecord, role: str) -> np.ndarray:
    if record.n_vectors != 1:
        raise MultiVectorUnsupported(
            f"{role} record {record.id!r} has {record.n_vectors} vectors; "
            "cosine/dot need single-vector records (use maxsim)")
    return record.vectors[0]


def _normalized(vectors: np.ndarray, owner: str) -> np.ndarray:
    """L2-normalize rows in float64 (same arithmetic on every scoring path)."""
    as64 = vectors.astype(np.float64)
    norms = np.linalg.norm(as64, axis=-1, keepdims=True)
    if (norms == 0.0).any():
        raise ZeroVectorWithCosine(f"zero vector in record {owner!r}")
    return as64 / norms


def _effective_tokens(record: EmbeddingRecord, cfg: ScorerConfig) -> np.ndarray:
    """Token matrix (float32 for the kernels) after configured normalization."""
    if cfg.l2_normalize_inputs or (cfg.similarity == "maxsim" and cfg.maxsim_inner == "cosine"):
        return _normalized(record.vectors, record.id).astype(np.float32)
    return record.vectors


def score(query: EmbeddingRecord, doc: EmbeddingRecord, cfg: ScorerConfig) -> float:
    """Similarity of one query record against one candidate record."""
    if query.dim != doc.dim:
        raise DimMismatch(f"query dim {query.dim} != doc dim {doc.dim}")
    if cfg.similarity == "maxsim":
        q = _effective_tokens(query, cfg)
        d = _effective_tokens(doc, cfg)
        offsets = np.array([0, d.shape[0]], dtype=np.int64)
        return float(_kernels.maxsim_scores(np.ascontiguousarray(q),
                                            np.ascontiguousarray(d), offsets)[0])
    q = _single_vector(query, "query").astype(np.float64)
    d = _single_vector(doc, "doc").astype(np.float64)
    if cfg.similarity == "cosine" or cfg.l2_normalize_inputs:
        q = _normalized(q, query.id)
        d = _normalized(d, doc.id)
    value = float(np.dot(q, d))
    if cfg.similarity == "cosine":
        value = min(1.0, max(-1.0, value))
    return value


class _PreparedCandidates:
    """Candidate set staged for repeated scoring under a fixed config."""

    def __init__(self, candidates: EmbeddingSet, cfg: ScorerConfig):
        if len(candidates) == 0:
            raise EmptyCandidateSet("candidate set is empty")
        self.cfg = cfg
        self.dim = candidates.dim
        self.ids = np.array(candidates.ids())
        records = list(candidates)
        if cfg.similarity == "maxsim":
            mats = [_effective_tokens(rec, cfg) for rec in records]
            self.offsets = np.zeros(len(mats) + 1, dtype=np.int64)
            np.cumsum([m.shape[0] for m in mats], out=self.offsets[1:])
            self.flat = np.ascontiguousarray(np.concatenate(mats, axis=0))
        else:
            rows = [_single_vector(rec, "candidate") for rec in records]
            matrix = np.stack(rows).astype(np.float64)
            if cfg.similarity == "cosine" or cfg.l2_normalize_inputs:
                norms = np.linalg.norm(matrix, axis=1, keepdims=True)
                for rec, norm in zip(records, norms[:, 0]):
                    if norm == 0.0:
                        raise ZeroVectorWithCosine(f"zero vector in record {rec.id!r}")
                matrix /= norms
            self.matrix = matrix

    def scores(self, query: EmbeddingRecord) -> np.ndarray:
        if query.dim != self.dim:
            raise DimMismatch(f"query dim {query.dim} != candidate dim {self.dim}")
        cfg = self.cfg
        if cfg.similarity == "maxsim":
            q = np.ascontiguousarray(_effective_tokens(query, cfg))
            return _kernels.maxsim_scores(q, self.flat, self.offsets)
        q = _single_vector(query, "query").astype(np.float64)
        if cfg.similarity == "cosine" or cfg.l2_normalize_inputs:
            norm = np.linalg.norm(q)
            if norm == 0.0:
                raise ZeroVectorWithCosine(f"zero vector in record {query.id!r}")
            q = q / norm
        out = self.matrix @ q
        if cfg.similarity == "cosine":
            np.clip(out, -1.0, 1.0, out=out)
        return out

    def top_k(self, query: EmbeddingRecord, k: int) -> RankedList:
        scores_arr = self.scores(query)
        order = np.lexsort((self.ids, -scores_arr))[:k]
        entries = tuple((str(self.ids[i]), float(scores_arr[i])) for i in order)
        return RankedList(query.id, entries)


def _candidate_set(candidates: EmbeddingSet | AnnotatedSet) -> EmbeddingSet:
    if isinstance(candidates, AnnotatedSet):
        if candidates.embeddings is None:
            raise EmptyCandidateSet("annotated set has no embeddings attached")
        return candidates.embeddings
    return candidates


def top_k(query: EmbeddingRecord, candidates: EmbeddingSet | AnnotatedSet,
          k: int, cfg: ScorerConfig) -> RankedList:
    """The k best candidates, scores non-increasing, ties by ascending id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return _PreparedCandidates(_candidate_set(candidates), cfg).top_k(query, k)


def build_run(queries: AnnotatedSet | EmbeddingSet, candidates: AnnotatedSet | EmbeddingSet,
              k: int, cfg: ScorerConfig, threads: int | None = None) -> RunFile:
    """One RankedList per query, in query order, deterministic for fixed inputs.

    Per-query scoring fans out over a thread pool; lists are merged in
    query order, so the output never depends on scheduling.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    prepared = _PreparedCandidates(_candidate_set(candidates), cfg)
    query_records = list(_candidate_set(queries))
    if threads is not None and threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    if threads == 1 or len(query_records) <= 1:
        lists = [prepared.top_k(rec, k) for rec in query_records]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            lists = list(pool.map(lambda rec: prepared.top_k(rec, k), query_records))
    return RunFile(tuple(lists), k)


def score_triplet(query: EmbeddingRecord, sem: EmbeddingRecord, cul: EmbeddingRecord,
                  non: EmbeddingRecord, cfg: ScorerConfig) -> TripletScores:
    """Score the three candidates of one forced-choice trial (no judging here)."""
    return TripletScores(
        query_id=query.id,
        s_sem=score(query, sem, cfg),
        s_cul=score(query, cul, cfg),
        s_non=score(query, non, cfg),
    )


def write_run(run: RunFile, path: str | Path, tag: str = "biaslens") -> None:
    """TREC run format: query_id Q0 doc_id rank score tag, tab-separated."""
    with open(path, "w", encoding="utf-8") as fh:
        for ranked in run.lists:
            for rank, (doc_id, doc_score) in enumerate(ranked.entries, start=1):
                fh.write(f"{ranked.query_id}\tQ0\t{doc_id}\t{rank}\t{doc_score:.6f}\t{tag}\n")


def load_run(path: str | Path) -> RunFile:
    """Parse a TREC run file back into ranked lists (order as on disk)."""
    per_query: dict[str, list[tuple[str, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise FormatError(f"{path}:{lineno}: expected 6 tab-separated fields")
            query_id, _, doc_id, _, score_text, _ = parts
            per_query.setdefault(query_id, []).append((doc_id, float(score_text)))
    lists = tuple(RankedList(qid, tuple(entries)) for qid, entries in per_query.items())
    k = max((len(l.entries) for l in lists), default=0)
    return RunFile(lists, k)
