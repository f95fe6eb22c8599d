"""Language-bias and relevance metrics over run files.

The bias side compares an expected language distribution P against the
observed distribution Q in each query's top-k via KL divergence, in two
flavours: rank-agnostic (LBKL, plain count proportions) and
rank-discounted (DLBKL, proportions weighted by w(i) = 1/log2(i+1) so
disparity near rank 1 costs more). KL is computed in nats; generalizing
the two-language formulation, the sum runs over every language in P's
support. The relevance side is Accuracy@k and binary-gain NDCG@k.

Zero observed mass is handled by additive epsilon smoothing over P's
support followed by renormalization; epsilon is configurable because
published absolute values depend on the (unstated) smoothing choice.
Lists shorter than k are evaluated over their actual length.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .corpus import AnnotatedSet, Catalog
from .errors import (
    MissingLanguageMeta,
    MissingRelevance,
    UnsmoothedZero,
)
from .retrieval import RankedList, RunFile


@dataclass(frozen=True)
class SmoothingConfig:
    """Additive smoothing: q(l) += epsilon for every l in P's support, renormalize."""

    epsilon: float = 1e-6

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class LanguageDistribution:
    """Expected per-language probabilities; non-negative, summing to 1."""

    p: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "p", dict(self.p))
        total = 0.0
        for lang, prob in self.p.items():
            if prob < 0:
                raise ValueError(f"negative probability for {lang!r}")
            total += prob
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, expected 1")

    @classmethod
    def uniform(cls, languages: Iterable[str]) -> "LanguageDistribution":
        langs = sorted(set(languages))
        if not langs:
            raise ValueError("no languages given")
        share = 1.0 / len(langs)
        return cls({lang: share for lang in langs})

    def support(self) -> list[str]:
        return [lang for lang, prob in self.p.items() if prob > 0]


@dataclass(frozen=True)
class ObservedDistribution:
    """Observed per-language proportions in one ranked list's top-k."""

    q: Mapping[str, float]
    weighted: bool
    k: int

    def __post_init__(self):
        object.__setattr__(self, "q", dict(self.q))


@dataclass(frozen=True)
class RankWeights:
    """Discount vector w(i) = 1/log2(i+1) for ranks 1..k."""

    k: int
    w: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "w", arr)


@dataclass(frozen=True)
class BiasReport:
    """Per-query and mean LBKL/DLBKL at one cutoff."""

    per_query: Mapping[str, Mapping[str, float]]
    mean_lbkl: float
    mean_dlbkl: float
    k: int
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)


def rank_weights(k: int) -> RankWeights:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranks = np.arange(1, k + 1, dtype=np.float64)
    return RankWeights(k, 1.0 / np.log2(ranks + 1.0))


def _language_at_ranks(ranked: RankedList, meta: AnnotatedSet, k: int) -> list[str]:
    languages = []
    for doc_id, _ in ranked.entries[:k]:
        lang = meta.language_of(doc_id)
        if not lang:
            raise MissingLanguageMeta(f"doc {doc_id!r} has no language metadata")
        languages.append(lang)
    return languages


def _proportions(languages: list[str], weights: np.ndarray | None) -> dict[str, float]:
    if weights is None:
        weights = np.ones(len(languages))
    totals: dict[str, float] = {}
    for lang, weight in zip(languages, weights):
        totals[lang] = totals.get(lang, 0.0) + float(weight)
    denom = float(weights[:len(languages)].sum())
    return {lang: value / denom for lang, value in totals.items()}


def _smooth(q: dict[str, float], support: Iterable[str] | None,
            smoothing: SmoothingConfig) -> dict[str, float]:
    langs = set(q)
    if support is not None:
        langs |= set(support)
        eps_langs = set(support)
    else:
        eps_langs = set(q)
    eps = smoothing.epsilon
    raw = {lang: q.get(lang, 0.0) + (eps if lang in eps_langs else 0.0) for lang in langs}
    total = sum(raw.values())
    return {lang: value / total for lang, value in sorted(raw.items())}


def observed_proportions(ranked: RankedList, meta: AnnotatedSet, k: int,
                         weighted: bool, smoothing: SmoothingConfig = SmoothingConfig(),
                         support: Iterable[str] | None = None) -> ObservedDistribution:
    """Count (or rank-discounted) language shares in the top-k, then smooth.

    weighted=False is the plain proportion of each language among the
    retrieved docs; weighted=True divides the sum of rank weights on the
    language's positions by the sum over all occupied positions. Weights
    are truncated to the actual list length when it is shorter than k.
    """
    if not ranked.entries:
        raise ValueError(f"query {ranked.query_id!r}: empty ranked list")
    languages = _language_at_ranks(ranked, meta, k)
    weights = rank_weights(len(languages)).w if weighted else None
    q = _proportions(languages, weights)
    return ObservedDistribution(_smooth(q, support, smoothing), weighted, k)


def kl_divergence(p: LanguageDistribution, q: ObservedDistribution) -> float:
    """Sum of p_l * ln(p_l / q_l) over P's support, in nats."""
    total = 0.0
    for lang, p_l in p.p.items():
        if p_l == 0.0:
            continue
        q_l = q.q.get(lang, 0.0)
        if q_l <= 0.0:
            raise UnsmoothedZero(
                f"observed mass for {lang!r} is 0 with p > 0; raise smoothing epsilon")
        total += p_l * math.log(p_l / q_l)
    return total


def compute_bias(run: RunFile, meta: AnnotatedSet, expected: LanguageDistribution,
                 k: int, smoothing: SmoothingConfig = SmoothingConfig()) -> BiasReport:
    """Per-query LBKL and DLBKL against the expected distribution, plus means."""
    per_query: dict[str, dict[str, float]] = {}
    support = expected.support()
    for ranked in run.lists:
        plain = observed_proportions(ranked, meta, k, False, smoothing, support)
        discounted = observed_proportions(ranked, meta, k, True, smoothing, support)
        per_query[ranked.query_id] = {
            "lbkl": kl_divergence(expected, plain),
            "dlbkl": kl_divergence(expected, discounted),
        }
    if not per_query:
        raise ValueError("run has no queries")
    n = len(per_query)
    mean_lbkl = sum(v["lbkl"] for v in per_query.values()) / n
    mean_dlbkl = sum(v["dlbkl"] for v in per_query.values()) / n
    return BiasReport(per_query, mean_lbkl, mean_dlbkl, k, smoothing)


def _relevant_for(relevant: Mapping[str, set[str]], query_id: str) -> set[str]:
    docs = relevant.get(query_id)
    if not docs:
        raise MissingRelevance(f"query {query_id!r} has no relevant set")
    return docs


def per_query_hits(run: RunFile, relevant: Mapping[str, set[str]], k: int) -> dict[str, bool]:
    """Whether each query has at least one relevant doc in its top-k."""
    hits = {}
    for ranked in run.lists:
        docs = _relevant_for(relevant, ranked.query_id)
        hits[ranked.query_id] = any(doc_id in docs for doc_id, _ in ranked.entries[:k])
    return hits


def per_query_ndcg(run: RunFile, relevant: Mapping[str, set[str]], k: int) -> dict[str, float]:
    """Binary-gain NDCG@k per query; ideal DCG uses min(k, |relevant|) ones."""
    values = {}
    for ranked in run.lists:
        docs = _relevant_for(relevant, ranked.query_id)
        dcg = 0.0
        for rank, (doc_id, _) in enumerate(ranked.entries[:k], start=1):
            if doc_id in docs:
                dcg += 1.0 / math.log2(rank + 1)
        ideal = sum(1.0 / math.log2(rank + 1) for rank in range(1, min(k, len(docs)) + 1))
        values[ranked.query_id] = dcg / ideal
    return values


def accuracy_at_k(run: RunFile, relevant: Mapping[str, set[str]], k: int) -> float:
    """Fraction of queries with at least one relevant doc in the top-k."""
    hits = per_query_hits(run, relevant, k)
    return sum(hits.values()) / len(hits)


def ndcg_at_k(run: RunFile, relevant: Mapping[str, set[str]], k: int) -> float:
    """Mean over queries of binary-gain NDCG@k."""
    values = per_query_ndcg(run, relevant, k)
    return sum(values.values()) / len(values)


@dataclass(frozen=True)
class TierHistogram:
    """Tier counts by rank position (1..k) and marginal totals."""

    by_rank: Mapping[int, Mapping[str, int]]
    totals: Mapping[str, int]
    k: int


def tier_histogram(run: RunFile, meta: AnnotatedSet, catalog: Catalog, k: int) -> TierHistogram:
    """Count resource tiers at each rank position, summed over queries."""
    by_rank: dict[int, dict[str, int]] = {}
    totals: dict[str, int] = {}
    for ranked in run.lists:
        languages = _language_at_ranks(ranked, meta, k)
        for rank, lang in enumerate(languages, start=1):
            tier = catalog.tier_of(lang)
            row = by_rank.setdefault(rank, {})
            row[tier] = row.get(tier, 0) + 1
            totals[tier] = totals.get(tier, 0) + 1
    return TierHistogram(by_rank, totals, k)


def write_bias_report(report: BiasReport, path: str | Path,
                      provenance: Mapping[str, object] | None = None,
                      ndcg: Mapping[str, float] | None = None,
                      hits: Mapping[str, bool] | None = None) -> None:
    """JSON report plus a flat CSV sibling (<path>.csv) for plotting.

    CSV columns are query_id, lbkl, dlbkl, ndcg, hit@k; the last two stay
    blank when no relevance data was supplied.
    """
    doc = {
        "k": report.k,
        "smoothing_epsilon": report.smoothing.epsilon,
        "mean_lbkl": report.mean_lbkl,
        "mean_dlbkl": report.mean_dlbkl,
        "per_query": {qid: dict(vals) for qid, vals in sorted(report.per_query.items())},
    }
    if ndcg is not None:
        doc["mean_ndcg"] = sum(ndcg.values()) / len(ndcg)
    if hits is not None:
        doc["accuracy"] = sum(hits.values()) / len(hits)
    if provenance is not None:
        doc["provenance"] = dict(provenance)
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(path.with_suffix(path.suffix + ".csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "lbkl", "dlbkl", "ndcg", "hit@k"])
        for qid, vals in sorted(report.per_query.items()):
            ndcg_cell = repr(ndcg[qid]) if ndcg is not None and qid in ndcg else ""
            hit_cell = int(hits[qid]) if hits is not None and qid in hits else ""
            writer.writerow([qid, repr(vals["lbkl"]), repr(vals["dlbkl"]), ndcg_cell, hit_cell])


def write_tier_histogram(hist: TierHistogram, path: str | Path) -> None:
    """CSV with one row per rank and per-tier columns; final row holds totals."""
    tiers = ("high", "medium", "low")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", *tiers])
        for rank in sorted(hist.by_rank):
            row = hist.by_rank[rank]
            writer.writerow([rank, *(row.get(t, 0) for t in tiers)])
        writer.writerow(["total", *(hist.totals.get(t, 0) for t in tiers)])
