"""Export jobs: inputs manifest -> embedding file + metadata sidecar."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from . import dummy, format as fmt

POOLINGS = ("none", "mean")
MODALITIES = ("text", "image")

SIDECAR_KEYS = ("language", "country", "concepts", "modality", "source_uri")


class ExportError(Exception):
    pass


class ModelLoadFailure(ExportError):
    pass


class InputUnreadable(ExportError):
    pass


@dataclass(frozen=True)
class ExportJob:
    """One batch of inputs pushed through one encoder into one file."""

    model: str
    inputs: str | Path
    modality: str
    out: str | Path
    pooling: str = "mean"
    normalize: bool = True
    batch_size: int = 32
    dim: int = 32  # dummy encoder only; real models fix their own dim
    sidecar: str | Path | None = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def sidecar_path(self) -> Path:
        if self.sidecar is not None:
            return Path(self.sidecar)
        return Path(str(self.out) + ".meta.jsonl")


def _read_inputs(path: str | Path, modality: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj:
                raise ValueError(f"{path}:{lineno}: input row needs an id")
            key = "text" if modality == "text" else "image"
            if key not in obj:
                raise ValueError(f"{path}:{lineno}: input row needs {key!r}")
            rows.append(obj)
    return rows


def _dummy_matrices(job: ExportJob, rows: list[dict]) -> Iterator[tuple[str, np.ndarray]]:
    for row in rows:
        if job.modality == "text":
            matrix = dummy.encode_text(row["text"], job.dim,
                                       multi_vector=True, normalize=job.normalize)
        else:
            try:
                payload = Path(row["image"]).read_bytes()
            except OSError as exc:
                raise InputUnreadable(f"input {row['id']!r}: {exc}") from exc
            matrix = dummy.encode_image_bytes(payload, job.dim, job.normalize)
        yield row["id"], matrix


def _real_matrices(job: ExportJob, rows: list[dict]) -> Iterator[tuple[str, np.ndarray]]:
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ModelLoadFailure(f"sentence-transformers unavailable: {exc}") from exc
    try:
        model = SentenceTransformer(job.model)
    except Exception as exc:
        raise ModelLoadFailure(f"cannot load model {job.model!r}: {exc}") from exc
    for start in range(0, len(rows), job.batch_size):
        batch = rows[start:start + job.batch_size]
        if job.modality == "text":
            items = [row["text"] for row in batch]
        else:
            from PIL import Image
            items = []
            for row in batch:
                try:
                    items.append(Image.open(row["image"]).convert("RGB"))
                except OSError as exc:
                    raise InputUnreadable(f"input {row['id']!r}: {exc}") from exc
        vectors = model.encode(items, normalize_embeddings=job.normalize)
        for row, vec in zip(batch, np.asarray(vectors, dtype=np.float32)):
            yield row["id"], vec[None, :]


def _pool(matrix: np.ndarray, pooling: str, normalize: bool) -> np.ndarray:
    if pooling == "mean":
        pooled = matrix.astype(np.float64).mean(axis=0, keepdims=True)
        if normalize:
            norm = np.linalg.norm(pooled)
            if norm > 0:
                pooled = pooled / norm
        return pooled.astype(np.float32)
    return matrix


def export(job: ExportJob) -> tuple[Path, Path]:
    """Run the job; on any failure partial outputs are removed.

    Returns (embedding_path, sidecar_path). The embedding file passes the
    toolkit's validation; sidecar tags come from the input manifest
    verbatim.
    """
    out = Path(job.out)
    sidecar = job.sidecar_path
    rows = _read_inputs(job.inputs, job.modality)
    source = _dummy_matrices(job, rows) if job.model == "dummy" else _real_matrices(job, rows)
    try:
        matrices = [(rec_id, _pool(matrix, job.pooling, job.normalize))
                    for rec_id, matrix in source]
        dims = {m.shape[1] for _, m in matrices}
        if len(dims) > 1:
            raise ExportError(f"inconsistent output dims {sorted(dims)}")
        dim = dims.pop() if dims else (job.dim if job.model == "dummy" else 0)
        multi_vector = job.pooling == "none"
        fmt.write_embedding_file(matrices, dim, multi_vector, out)
        side_rows = []
        for row in rows:
            side = {"id": row["id"]}
            for key in SIDECAR_KEYS:
                if key in row:
                    side[key] = row[key]
            side.setdefault("modality", job.modality)
            side.setdefault("language", row.get("language", ""))
            side.setdefault("country", row.get("country", ""))
            side.setdefault("concepts", row.get("concepts", []))
            side.setdefault("source_uri", row.get("source_uri"))
            side_rows.append(side)
        fmt.write_sidecar(side_rows, sidecar)
    except BaseException:
        out.unlink(missing_ok=True)
        sidecar.unlink(missing_ok=True)
        raise
    return out, sidecar
