"""Controlled synthetic inputs for validating metric behaviour.

Two generators:

* gen_ranked_lists builds run files whose language-rank placement is
  prescribed (top-loaded, bottom-loaded, alternating, uniform random),
  the scenario family behind the LBKL-vs-DLBKL ordering checks.

* gen_embedding_world builds a miniature text/image embedding universe
  with label-conditioned Gaussian clusters plus a triplet manifest. The
  geometry is engineered so outcomes at the alignment extremes are exact:
  concepts and culture labels occupy orthogonal axes, a text query is
  alignment * concept_axis + (1 - alignment) * culture_axis, an image is
  concept_axis + culture_axis, and noise lives in axes disjoint from the
  signal (and text noise disjoint from image noise). Query-candidate
  similarity therefore carries no noise at all: at alignment 1 the
  semantic candidate wins every trial by construction, at alignment 0
  the cultural one does.

All randomness flows through per-entity seeded streams (see ``rng``), so
same seed means byte-identical artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import AnnotatedSet, EmbeddingRecord, EmbeddingSet, ItemMeta, TripletEntry
from .errors import CountMismatch, DegenerateSpec
from .retrieval import RankedList, RunFile
from .rng import stream

PATTERNS = ("top_loaded", "bottom_loaded", "alternating", "uniform_random")

DEFAULT_CONCEPTS = ("food", "dance", "train", "mask", "festival")
DEFAULT_LABELS = (("en", "USA"), ("ja", "JPN"), ("th", "THA"), ("sw", "KEN"))


@dataclass(frozen=True)
class PlacementSpec:
    """Prescription for one family of ranked lists."""

    k: int
    pattern: str
    languages: tuple[tuple[str, int], ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "languages", tuple((l, int(c)) for l, c in self.languages))
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if sum(count for _, count in self.languages) != self.k:
            raise CountMismatch(
                f"language counts sum to {sum(c for _, c in self.languages)}, k is {self.k}")


@dataclass(frozen=True)
class ClusterSpec:
    """Prescription for a synthetic embedding world.

    alignment 1 collapses all culture centroids out of the text queries
    (the language-agnostic regime); alignment 0 leaves only culture.
    """

    labels: tuple[tuple[str, str], ...] = DEFAULT_LABELS
    points_per_label: int = 3
    dim: int = 16
    centroid_separation: float = 1.0
    noise_sigma: float = 0.1
    alignment: float = 1.0
    seed: int = 0
    concepts: tuple[str, ...] = DEFAULT_CONCEPTS


def _placement(spec: PlacementSpec, query_id: str) -> list[str]:
    blocks = [[lang] * count for lang, count in spec.languages]
    if spec.pattern == "top_loaded":
        return [lang for block in blocks for lang in block]
    if spec.pattern == "bottom_loaded":
        flat = [lang for block in blocks for lang in block]
        return flat[::-1]
    if spec.pattern == "alternating":
        remaining = [list(block) for block in blocks]
        out: list[str] = []
        while len(out) < spec.k:
            for block in remaining:
                if block:
                    out.append(block.pop())
        return out
    flat = [lang for block in blocks for lang in block]
    rng = stream(spec.seed, "placement", query_id)
    return [flat[i] for i in rng.permutation(len(flat))]


def gen_ranked_lists(spec: PlacementSpec, n_queries: int) -> tuple[RunFile, AnnotatedSet]:
    """Run file with prescribed language placements plus matching metadata."""
    if n_queries < 1:
        raise ValueError(f"n_queries must be >= 1, got {n_queries}")
    lists = []
    metas = []
    for qi in range(n_queries):
        query_id = f"q{qi:04d}"
        languages = _placement(spec, query_id)
        entries = []
        for rank, lang in enumerate(languages, start=1):
            doc_id = f"{query_id}:d{rank:03d}"
            entries.append((doc_id, round(1.0 - (rank - 1) / spec.k, 9)))
            metas.append(ItemMeta(id=doc_id, language=lang, country="SYN",
                                  modality="text"))
        lists.append(RankedList(query_id, tuple(entries)))
    return RunFile(tuple(lists), spec.k), AnnotatedSet.from_meta(metas)


def _check_world_spec(spec: ClusterSpec) -> None:
    countries = [country for _, country in spec.labels]
    languages = [lang for lang, _ in spec.labels]
    if len(spec.labels) < 2 or len(set(countries)) != len(countries) \
            or len(set(languages)) != len(languages):
        raise DegenerateSpec("need >= 2 labels with distinct languages and countries")
    if len(spec.concepts) < 2 or len(set(spec.concepts)) != len(spec.concepts):
        raise DegenerateSpec("need >= 2 distinct concepts")
    signal = len(spec.concepts) + len(spec.labels)
    if spec.dim < signal + 2:
        raise DegenerateSpec(
            f"dim {spec.dim} too small: need >= {signal + 2} "
            f"({len(spec.concepts)} concepts + {len(spec.labels)} labels + 2 noise axes)")
    if not (0.0 <= spec.alignment <= 1.0):
        raise DegenerateSpec(f"alignment must be in [0, 1], got {spec.alignment}")
    if spec.noise_sigma <= 0:
        raise DegenerateSpec(f"noise_sigma must be > 0, got {spec.noise_sigma}")
    if spec.centroid_separation < 0:
        raise DegenerateSpec(f"centroid_separation must be >= 0, got {spec.centroid_separation}")
    if spec.points_per_label < 1:
        raise DegenerateSpec(f"points_per_label must be >= 1, got {spec.points_per_label}")


def gen_embedding_world(spec: ClusterSpec) -> tuple[AnnotatedSet, AnnotatedSet,
                                                    list[TripletEntry]]:
    """Text queries, image pool and a valid triplet manifest, all seeded.

    One query per (label, concept) pair; points_per_label images per
    (label, concept) pair. Candidate picks are uniform draws from the
    id-sorted eligible pools, under per-query streams.
    """
    _check_world_spec(spec)
    n_concepts = len(spec.concepts)
    n_labels = len(spec.labels)
    base = n_concepts + n_labels
    text_noise = np.arange(base, base + (spec.dim - base) // 2)
    image_noise = np.arange(base + (spec.dim - base) // 2, spec.dim)
    s = spec.centroid_separation
    alpha = spec.alignment

    query_records, query_metas = [], []
    image_records, image_metas = [], []
    image_index: dict[str, tuple[str, str]] = {}  # id -> (country, concept)

    for li, (language, country) in enumerate(spec.labels):
        for ci, concept in enumerate(spec.concepts):
            query_id = f"q_{country}_{concept}"
            vec = np.zeros(spec.dim)
            vec[ci] = alpha * s
            vec[n_concepts + li] = (1.0 - alpha) * s
            noise = stream(spec.seed, "query", query_id).normal(
                0.0, spec.noise_sigma, len(text_noise))
            vec[text_noise] = noise
            query_records.append(EmbeddingRecord(query_id, vec[None, :].astype(np.float32),
                                                 modality="text"))
            query_metas.append(ItemMeta(id=query_id, language=language, country=country,
                                        concepts=(concept,), modality="text"))
            for t in range(spec.points_per_label):
                image_id = f"i_{country}_{concept}_{t}"
                ivec = np.zeros(spec.dim)
                ivec[ci] = s
                ivec[n_concepts + li] = s
                ivec[image_noise] = stream(spec.seed, "image", image_id).normal(
                    0.0, spec.noise_sigma, len(image_noise))
                image_records.append(EmbeddingRecord(image_id, ivec[None, :].astype(np.float32),
                                                     modality="image"))
                image_metas.append(ItemMeta(id=image_id, language=language, country=country,
                                            concepts=(concept,), modality="image"))
                image_index[image_id] = (country, concept)

    sorted_images = sorted(image_index)
    manifest = []
    for li, (language, country) in enumerate(spec.labels):
        for concept in spec.concepts:
            query_id = f"q_{country}_{concept}"
            sem_pool = [i for i in sorted_images
                        if image_index[i] != (country, concept)
                        and image_index[i][1] == concept]
            cul_pool = [i for i in sorted_images
                        if image_index[i][0] == country and image_index[i][1] != concept]
            non_pool = [i for i in sorted_images
                        if image_index[i][0] != country and image_index[i][1] != concept]
            rng = stream(spec.seed, "manifest", query_id)
            manifest.append(TripletEntry(
                query_id=query_id,
                query_text=f"{concept} ({language})",
                query_language=language,
                query_country=country,
                concept=concept,
                sem_id=sem_pool[int(rng.integers(len(sem_pool)))],
                cul_id=cul_pool[int(rng.integers(len(cul_pool)))],
                non_id=non_pool[int(rng.integers(len(non_pool)))],
            ))

    queries = AnnotatedSet(EmbeddingSet(query_records, dim=spec.dim),
                           {m.id: m for m in query_metas})
    images = AnnotatedSet(EmbeddingSet(image_records, dim=spec.dim),
                          {m.id: m for m in image_metas})
    return queries, images, manifest
