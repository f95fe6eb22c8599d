"""Triplet benchmark assembly and embedding-similarity de-duplication.

assemble_triplets turns a tagged item pool into forced-choice manifests
under the candidate constraints: the semantic candidate shares the query
concept but not the country, the cultural candidate shares the country
and none of the query's concept labels, the non-relevant candidate shares
neither. Concept exclusion uses the item's full multi-label concept list,
not just its primary concept. Queries with an empty candidate slot are
skipped and reported, never fatal.

dedup is a keep-first greedy scan in ascending id order: an item is
dropped when its cosine similarity to any already-kept item reaches the
threshold (0.92 by default), and the witness pair is recorded.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .corpus import AnnotatedSet, EmbeddingSet, ItemMeta, TripletEntry
from .errors import MultiVectorUnsupported, ZeroVectorWithCosine
from .rng import stream


@dataclass(frozen=True)
class DedupConfig:
    threshold: float = 0.92
    strategy: str = "keep_first"

    def __post_init__(self):
        if not (0.0 < self.threshold <= 1.0):
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.strategy != "keep_first":
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class AssemblyConfig:
    seed: int = 0
    triplets_per_query: int = 1
    require_distinct_countries: bool = True

    def __post_init__(self):
        if self.triplets_per_query < 1:
            raise ValueError(f"triplets_per_query must be >= 1, got {self.triplets_per_query}")


class DroppedItem(NamedTuple):
    id: str
    duplicate_of: str
    similarity: float


@dataclass(frozen=True)
class DedupResult:
    kept: tuple[str, ...]
    dropped: tuple[DroppedItem, ...]


class QuerySpec(NamedTuple):
    """One benchmark query: its text, origin and target concept."""

    text: str
    language: str
    country: str
    concept: str


@dataclass(frozen=True)
class AssemblyResult:
    entries: tuple[TripletEntry, ...]
    skipped: tuple[tuple[str, str], ...]  # (query_id, reason)


def dedup(annotated: AnnotatedSet | EmbeddingSet, cfg: DedupConfig = DedupConfig()) -> DedupResult:
    """Greedy keep-first similarity dedup over single-vector embeddings."""
    emb = annotated.embeddings if isinstance(annotated, AnnotatedSet) else annotated
    if emb is None:
        raise ValueError("no embeddings to dedup")
    ids = sorted(emb.ids())
    if not ids:
        return DedupResult((), ())
    rows = []
    for rec_id in ids:
        record = emb.record(rec_id)
        if record.n_vectors != 1:
            raise MultiVectorUnsupported(
                f"record {rec_id!r} is multi-vector; pool it to a single vector first")
        vec = record.vectors[0].astype(np.float64)
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise ZeroVectorWithCosine(f"zero vector in record {rec_id!r}")
        rows.append(vec / norm)
    matrix = np.ascontiguousarray(np.stack(rows), dtype=np.float32)
    kept_mask, witness, similarity = _kernels.greedy_dedup(matrix, cfg.threshold)
    kept = tuple(rec_id for rec_id, keep in zip(ids, kept_mask) if keep)
    dropped = tuple(DroppedItem(ids[i], ids[int(witness[i])], float(similarity[i]))
                    for i in range(len(ids)) if not kept_mask[i])
    return DedupResult(kept, dropped)


def _eligible(item: ItemMeta, query: QuerySpec, slot: str, distinct_countries: bool) -> bool:
    if not item.concepts:
        return False
    if slot == "sem":
        if query.concept not in item.concepts:
            return False
        return item.country != query.country or not distinct_countries
    if query.concept in item.concepts:  # cul and non exclude the query concept entirely
        return False
    if slot == "cul":
        return item.country == query.country
    return item.country != query.country or not distinct_countries


def assemble_triplets(pool: Iterable[ItemMeta], queries: Sequence[QuerySpec],
                      cfg: AssemblyConfig = AssemblyConfig()) -> AssemblyResult:
    """Draw one or more candidate triplets per query from the tagged pool.

    Deterministic in (pool contents, queries, seed): the pool is sorted
    by id before sampling and each query draws from its own stream.
    """
    items = sorted(pool, key=lambda item: item.id)
    entries = []
    skipped = []
    for qi, query in enumerate(queries):
        query_id = f"q{qi:05d}"
        pools = {slot: [item.id for item in items
                        if _eligible(item, query, slot, cfg.require_distinct_countries)]
                 for slot in ("sem", "cul", "non")}
        empty = [slot for slot in ("sem", "cul", "non") if not pools[slot]]
        if empty:
            skipped.append((query_id, f"{empty[0]}_empty"))
            continue
        rng = stream(cfg.seed, "assemble", query_id)
        for _ in range(cfg.triplets_per_query):
            entries.append(TripletEntry(
                query_id=query_id,
                query_text=query.text,
                query_language=query.language,
                query_country=query.country,
                concept=query.concept,
                sem_id=pools["sem"][int(rng.integers(len(pools["sem"])))],
                cul_id=pools["cul"][int(rng.integers(len(pools["cul"])))],
                non_id=pools["non"][int(rng.integers(len(pools["non"])))],
            ))
    return AssemblyResult(tuple(entries), tuple(skipped))


@dataclass(frozen=True)
class ManifestStats:
    total: int
    by_country: Counter = field(default_factory=Counter)
    by_concept: Counter = field(default_factory=Counter)


def manifest_stats(entries: Iterable[TripletEntry]) -> ManifestStats:
    """Entry counts per query country and per concept."""
    by_country: Counter = Counter()
    by_concept: Counter = Counter()
    total = 0
    for entry in entries:
        total += 1
        by_country[entry.query_country] += 1
        by_concept[entry.concept] += 1
    return ManifestStats(total, by_country, by_concept)


def write_skip_report(skipped: Sequence[tuple[str, str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "reason"])
        writer.writerows(skipped)


def write_stats_csv(stats: ManifestStats, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "key", "count"])
        writer.writerow(["total", "", stats.total])
        for country in sorted(stats.by_country):
            writer.writerow(["country", country, stats.by_country[country]])
        for concept in sorted(stats.by_concept):
            writer.writerow(["concept", concept, stats.by_concept[concept]])
