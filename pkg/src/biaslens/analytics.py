"""Unimodal cluster analytics: exact silhouette and Pearson correlation.

Silhouette quantifies how separable the embeddings of one label group
(language or country) are from the rest: s(i) = (b - a) / max(a, b) with
a the mean intra-label distance and b the best mean distance to another
label. Per-label means of s pair with per-label self-preference scores
in a Pearson correlation to test whether poorly aligned text clusters
drive cultural bias.

Computation is exact O(n^2) over the pairwise distances (no sampling);
multi-vector records are mean-pooled to a single vector first. Items
whose label group is a singleton get s = 0 by convention, as do points
with a = b = 0 (all points identical).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .corpus import AnnotatedSet
from .errors import LengthMismatch, SingleLabelOnly, ZeroVariance

DISTANCES = ("euclidean", "cosine_distance")


@dataclass(frozen=True)
class SilhouetteReport:
    per_item: Mapping[str, float]
    per_label: Mapping[str, float]


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    n: int


def _pooled_matrix(annotated: AnnotatedSet, ids: list[str]) -> np.ndarray:
    rows = []
    for rec_id in ids:
        record = annotated.record(rec_id)
        vecs = record.vectors.astype(np.float64)
        rows.append(vecs[0] if record.n_vectors == 1 else vecs.mean(axis=0))
    return np.ascontiguousarray(rows)


def silhouette(annotated: AnnotatedSet, label_key: str = "language",
               distance: str = "euclidean") -> SilhouetteReport:
    """Exact silhouette per item plus per-label means."""
    if label_key not in ("language", "country"):
        raise ValueError(f"label_key must be language or country, got {label_key!r}")
    if distance not in DISTANCES:
        raise ValueError(f"distance must be one of {DISTANCES}, got {distance!r}")
    ids = annotated.ids()
    labels = []
    for rec_id in ids:
        meta = annotated.meta(rec_id)
        label = getattr(meta, label_key, None) if meta else None
        if not label:
            raise ValueError(f"item {rec_id!r} has no {label_key} label")
        labels.append(label)
    label_names = sorted(set(labels))
    if len(label_names) < 2:
        raise SingleLabelOnly(f"need at least 2 distinct {label_key} labels")
    index_of = {name: i for i, name in enumerate(label_names)}
    label_idx = np.array([index_of[l] for l in labels], dtype=np.int64)
    counts = np.bincount(label_idx, minlength=len(label_names))
    points = _pooled_matrix(annotated, ids)
    sums = _kernels.silhouette_sums(points, label_idx, len(label_names),
                                    distance == "cosine_distance")

    per_item: dict[str, float] = {}
    label_totals = np.zeros(len(label_names))
    for i, rec_id in enumerate(ids):
        own = label_idx[i]
        if counts[own] == 1:
            value = 0.0
        else:
            a = sums[i, own] / (counts[own] - 1)
            b = math.inf
            for g in range(len(label_names)):
                if g != own and counts[g] > 0:
                    b = min(b, sums[i, g] / counts[g])
            denom = max(a, b)
            value = 0.0 if denom == 0.0 else float((b - a) / denom)
        per_item[rec_id] = value
        label_totals[own] += value
    per_label = {name: float(label_totals[index_of[name]] / counts[index_of[name]])
                 for name in label_names}
    return SilhouetteReport(per_item, per_label)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise LengthMismatch(f"got {len(xs)} xs and {len(ys)} ys")
    if len(xs) < 2:
        raise ValueError("need at least 2 pairs")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("an input has zero variance")
    r = float(dx @ dy) / math.sqrt(sx * sy)
    return CorrelationResult(min(1.0, max(-1.0, r)), len(xs))


def write_silhouette_csv(report: SilhouetteReport, counts: Mapping[str, int],
                         path: str | Path) -> None:
    """CSV of per-label mean silhouettes: label, mean_silhouette, n."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "mean_silhouette", "n"])
        for label in sorted(report.per_label):
            writer.writerow([label, repr(report.per_label[label]), counts.get(label, 0)])


def write_paired_csv(rows: Sequence[tuple], path: str | Path,
                     value_names: Sequence[str] = ("sp", "ts", "is")) -> None:
    """CSV of per-group value tuples feeding the correlation step.

    The default column set mirrors the published per-country layout:
    self-preference score, text silhouette, image silhouette.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", *value_names])
        for group, *values in rows:
            writer.writerow([group, *(repr(float(v)) for v in values)])
