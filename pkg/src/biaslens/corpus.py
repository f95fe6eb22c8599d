"""Data model and on-disk formats shared by every other module.

Three formats live here:

* the binary embedding container (magic ``PEMB``, little-endian header,
  float32 payload) with a canonical encoding so write(load(f)) == f,
* the JSONL metadata sidecar (id, language, country, concepts, modality,
  source_uri),
* the JSON language catalog mapping language tags to resource tiers and
  Common Crawl percentages, with the CC-MAIN-2025-18 table embedded as
  the default.

Loaded objects are immutable after construction and safe to share across
worker threads.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import (
    BadMagic,
    DuplicateId,
    DuplicateMetaId,
    FormatError,
    NegativePercentage,
    NonFiniteValue,
    TruncatedPayload,
    UnknownLanguage,
    UnknownTierName,
    VersionUnsupported,
)

MAGIC = b"PEMB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBIQ")  # magic, version, flags, dim, count

TIERS = ("high", "medium", "low")

# Language resource table (Common Crawl CC-MAIN-2025-18 shares, percent).
# 36 languages; tag, tier, crawl percentage.
_DEFAULT_CATALOG_ROWS = (
    ("en", "high", 43.9499),
    ("ru", "high", 5.7614),
    ("de", "high", 5.5691),
    ("ja", "medium", 4.9152),
    ("zh", "medium", 4.8778),
    ("es", "medium", 4.5422),
    ("fr", "medium", 4.3271),
    ("it", "medium", 2.4060),
    ("pt", "medium", 2.3369),
    ("pl", "medium", 1.8744),
    ("nl", "medium", 1.8083),
    ("id", "medium", 1.1759),
    ("tr", "medium", 1.1274),
    ("cs", "medium", 1.0479),
    ("vi", "medium", 1.0213),
    ("ko", "low", 0.7865),
    ("fa", "low", 0.7087),
    ("sv", "low", 0.6736),
    ("ar", "low", 0.6722),
    ("ro", "low", 0.6374),
    ("uk", "low", 0.6079),
    ("el", "low", 0.5651),
    ("hu", "low", 0.5082),
    ("da", "low", 0.4792),
    ("th", "low", 0.4269),
    ("fi", "low", 0.3649),
    ("no", "low", 0.3135),
    ("he", "low", 0.2654),
    ("hr", "low", 0.2339),
    ("hi", "low", 0.2004),
    ("bn", "low", 0.1064),
    ("te", "low", 0.0213),
    ("sw", "low", 0.0102),
    ("fil", "low", 0.0084),
    ("mi", "low", 0.0014),
    ("quz", "low", 0.0005),
)


@dataclass(frozen=True)
class EmbeddingRecord:
    """One id with its float32 vector(s): a (n_vectors, dim) matrix.

    n_vectors == 1 is a single-vector (dual-encoder style) record;
    n_vectors > 1 is a late-interaction token matrix.
    """

    id: str
    vectors: np.ndarray
    modality: str | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"record {self.id!r}: vectors must be a non-empty 2-D matrix")
        arr.flags.writeable = False
        object.__setattr__(self, "vectors", arr)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def n_vectors(self) -> int:
        return int(self.vectors.shape[0])


class EmbeddingSet:
    """Id-addressed, validated collection of records sharing one dim."""

    def __init__(self, records: Iterable[EmbeddingRecord], dim: int | None = None,
                 multi_vector: bool | None = None):
        by_id: dict[str, EmbeddingRecord] = {}
        for rec in records:
            if rec.id in by_id:
                raise DuplicateId(f"duplicate embedding id {rec.id!r}")
            if not np.isfinite(rec.vectors).all():
                raise NonFiniteValue(f"record {rec.id!r} contains a non-finite value")
            by_id[rec.id] = rec
        dims = {rec.dim for rec in by_id.values()}
        if len(dims) > 1:
            raise FormatError(f"records disagree on dim: {sorted(dims)}")
        if dim is None:
            if not dims:
                raise ValueError("dim is required for an empty set")
            dim = dims.pop()
        elif dims and dims != {dim}:
            raise FormatError(f"declared dim {dim} but records have dim {dims.pop()}")
        has_multi = any(rec.n_vectors > 1 for rec in by_id.values())
        if multi_vector is None:
            multi_vector = has_multi
        elif not multi_vector and has_multi:
            raise FormatError("multi-vector record in a set declared single-vector")
        self._records = by_id
        self.dim = int(dim)
        self.multi_vector = bool(multi_vector)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, rec_id: str) -> bool:
        return rec_id in self._records

    def __iter__(self) -> Iterator[EmbeddingRecord]:
        return iter(self._records.values())

    def ids(self) -> list[str]:
        return list(self._records)

    def record(self, rec_id: str) -> EmbeddingRecord:
        return self._records[rec_id]


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Parse and validate a binary embedding file."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r}", offset=0)
    if len(data) < _HEADER.size:
        raise TruncatedPayload(f"{path}: header incomplete", offset=len(data))
    _, version, flags, dim, count = _HEADER.unpack_from(data, 0)
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"{path}: version {version} not supported", offset=4)
    multi_vector = bool(flags & 1)
    pos = _HEADER.size
    records = []
    for index in range(count):
        if pos + 2 > len(data):
            raise TruncatedPayload(f"{path}: record {index} id length missing", offset=pos)
        (id_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        if pos + id_len > len(data):
            raise TruncatedPayload(f"{path}: record {index} id truncated", offset=pos)
        rec_id = data[pos:pos + id_len].decode("utf-8")
        pos += id_len
        if pos + 4 > len(data):
            raise TruncatedPayload(f"{path}: record {rec_id!r} vector count missing", offset=pos)
        (n_vectors,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if n_vectors == 0:
            raise FormatError(f"{path}: record {rec_id!r} declares 0 vectors", offset=pos - 4)
        if not multi_vector and n_vectors != 1:
            raise FormatError(
                f"{path}: record {rec_id!r} has {n_vectors} vectors in a single-vector file",
                offset=pos - 4)
        nbytes = n_vectors * dim * 4
        if pos + nbytes > len(data):
            raise TruncatedPayload(f"{path}: record {rec_id!r} payload truncated", offset=pos)
        vecs = np.frombuffer(data, dtype="<f4", count=n_vectors * dim, offset=pos)
        pos += nbytes
        records.append(EmbeddingRecord(rec_id, vecs.reshape(n_vectors, dim)))
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes", offset=pos)
    return EmbeddingSet(records, dim=dim, multi_vector=multi_vector)


def write_embeddings(emb_set: EmbeddingSet, path: str | Path) -> None:
    """Write the canonical encoding (record order preserved)."""
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, 1 if emb_set.multi_vector else 0,
                          emb_set.dim, len(emb_set))]
    for rec in emb_set:
        id_bytes = rec.id.encode("utf-8")
        parts.append(struct.pack("<H", len(id_bytes)))
        parts.append(id_bytes)
        parts.append(struct.pack("<I", rec.n_vectors))
        parts.append(rec.vectors.astype("<f4", copy=False).tobytes())
    Path(path).write_bytes(b"".join(parts))


@dataclass(frozen=True)
class ItemMeta:
    """Sidecar row for one embedding id."""

    id: str
    language: str
    country: str
    concepts: tuple[str, ...] = ()
    modality: str = "text"
    source_uri: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "language", self.language.lower())
        object.__setattr__(self, "concepts", tuple(self.concepts))
        if self.modality == "text" and not self.language:
            raise ValueError(f"text item {self.id!r} needs a language tag")


def load_meta(path: str | Path) -> list[ItemMeta]:
    """Read a JSONL metadata sidecar."""
    metas = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: bad JSON ({exc})") from exc
            metas.append(ItemMeta(
                id=obj["id"],
                language=obj.get("language", ""),
                country=obj.get("country", ""),
                concepts=tuple(obj.get("concepts", [])),
                modality=obj.get("modality", "text"),
                source_uri=obj.get("source_uri"),
            ))
    return metas


def write_meta(metas: Iterable[ItemMeta], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for meta in metas:
            row = {
                "id": meta.id,
                "language": meta.language,
                "country": meta.country,
                "concepts": list(meta.concepts),
                "modality": meta.modality,
                "source_uri": meta.source_uri,
            }
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


class AnnotatedSet:
    """Embeddings joined with their metadata (embeddings optional).

    Metric code only needs id -> meta lookups, so run files plus a
    sidecar are enough; scoring code additionally needs the records.
    """

    def __init__(self, embeddings: EmbeddingSet | None, meta: Mapping[str, ItemMeta],
                 missing_meta: tuple[str, ...] = (), unmatched_meta: tuple[str, ...] = ()):
        self.embeddings = embeddings
        self._meta = dict(meta)
        self.missing_meta = missing_meta
        self.unmatched_meta = unmatched_meta

    @classmethod
    def from_meta(cls, metas: Iterable[ItemMeta]) -> "AnnotatedSet":
        table = {}
        for meta in metas:
            if meta.id in table:
                raise DuplicateMetaId(f"duplicate metadata id {meta.id!r}")
            table[meta.id] = meta
        return cls(None, table)

    def __len__(self) -> int:
        return len(self.embeddings) if self.embeddings is not None else len(self._meta)

    def ids(self) -> list[str]:
        if self.embeddings is not None:
            return self.embeddings.ids()
        return list(self._meta)

    def record(self, rec_id: str) -> EmbeddingRecord:
        if self.embeddings is None:
            raise KeyError(f"no embeddings attached (lookup of {rec_id!r})")
        return self.embeddings.record(rec_id)

    def meta(self, rec_id: str) -> ItemMeta | None:
        return self._meta.get(rec_id)

    def language_of(self, rec_id: str) -> str | None:
        meta = self._meta.get(rec_id)
        return meta.language if meta else None

    def country_of(self, rec_id: str) -> str | None:
        meta = self._meta.get(rec_id)
        return meta.country if meta else None


def join_meta(emb_set: EmbeddingSet, metas: Iterable[ItemMeta]) -> AnnotatedSet:
    """Join embeddings with sidecar rows; the join report lists both gaps."""
    table: dict[str, ItemMeta] = {}
    for meta in metas:
        if meta.id in table:
            raise DuplicateMetaId(f"duplicate metadata id {meta.id!r}")
        table[meta.id] = meta
    missing_meta = tuple(i for i in emb_set.ids() if i not in table)
    unmatched_meta = tuple(i for i in table if i not in emb_set)
    return AnnotatedSet(emb_set, table, missing_meta, unmatched_meta)


@dataclass(frozen=True)
class Catalog:
    """Language -> resource tier and Common Crawl percentage."""

    tiers: Mapping[str, str]
    crawl_pct: Mapping[str, float]

    def __post_init__(self):
        for lang, tier in self.tiers.items():
            if tier not in TIERS:
                raise UnknownTierName(f"language {lang!r}: unknown tier {tier!r}")
            if lang not in self.crawl_pct:
                raise ValueError(f"language {lang!r} has a tier but no crawl_pct")
        for lang, pct in self.crawl_pct.items():
            if not math.isfinite(pct) or pct < 0:
                raise NegativePercentage(f"language {lang!r}: crawl_pct {pct!r}")

    def tier_of(self, language: str) -> str:
        try:
            return self.tiers[language]
        except KeyError:
            raise UnknownLanguage(f"language {language!r} not in catalog") from None

    def languages(self) -> list[str]:
        return list(self.tiers)


def default_catalog() -> Catalog:
    tiers = {lang: tier for lang, tier, _ in _DEFAULT_CATALOG_ROWS}
    pct = {lang: value for lang, _, value in _DEFAULT_CATALOG_ROWS}
    return Catalog(tiers, pct)


def load_catalog(path: str | Path | None = None) -> Catalog:
    """Load a catalog file, or the embedded default table when path is None."""
    if path is None:
        return default_catalog()
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    tiers = {}
    pct = {}
    for lang, entry in raw.items():
        tiers[lang.lower()] = entry["tier"]
        pct[lang.lower()] = float(entry["crawl_pct"])
    return Catalog(tiers, pct)


def write_catalog(catalog: Catalog, path: str | Path) -> None:
    rows = {lang: {"tier": catalog.tiers[lang], "crawl_pct": catalog.crawl_pct[lang]}
            for lang in catalog.tiers}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class TripletEntry:
    """One forced-choice trial: a query plus its three image candidates.

    sem shares the query's concept but not its country, cul shares the
    country but none of the query's concept labels, non shares neither.
    """

    query_id: str
    query_text: str
    query_language: str
    query_country: str
    concept: str
    sem_id: str
    cul_id: str
    non_id: str


def load_manifest(path: str | Path) -> list[TripletEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: bad JSON ({exc})") from exc
            entries.append(TripletEntry(
                query_id=obj["query_id"],
                query_text=obj["query_text"],
                query_language=obj["query_language"],
                query_country=obj["query_country"],
                concept=obj["concept"],
                sem_id=obj["sem_id"],
                cul_id=obj["cul_id"],
                non_id=obj["non_id"],
            ))
    return entries


def write_manifest(entries: Iterable[TripletEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            row = {
                "query_id": entry.query_id,
                "query_text": entry.query_text,
                "query_language": entry.query_language,
                "query_country": entry.query_country,
                "concept": entry.concept,
                "sem_id": entry.sem_id,
                "cul_id": entry.cul_id,
                "non_id": entry.non_id,
            }
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
