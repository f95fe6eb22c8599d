"""Writers for the toolkit's on-disk formats.

Binary embedding container: magic "PEMB", u16 version 1, u8 flags
(bit0 = multi-vector), u32 dim, u64 record count, all little-endian;
then per record u16 id byte length, UTF-8 id, u32 n_vectors and
n_vectors * dim float32 values. No padding. The JSONL sidecar carries
id, language, country, concepts, modality, source_uri per line.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

MAGIC = b"PEMB"
VERSION = 1
_HEADER = struct.Struct("<4sHBIQ")


def write_embedding_file(records: Iterable[tuple[str, np.ndarray]], dim: int,
                         multi_vector: bool, path: str | Path) -> int:
    """Write (id, (n_vectors, dim) float32 matrix) pairs; returns the count."""
    body = []
    count = 0
    for rec_id, vectors in records:
        matrix = np.ascontiguousarray(vectors, dtype="<f4")
        if matrix.ndim != 2 or matrix.shape[1] != dim or matrix.shape[0] < 1:
            raise ValueError(f"record {rec_id!r}: expected (n>=1, {dim}) matrix, "
                             f"got {matrix.shape}")
        if not multi_vector and matrix.shape[0] != 1:
            raise ValueError(f"record {rec_id!r}: multi-vector output in single-vector job")
        if not np.isfinite(matrix).all():
            raise ValueError(f"record {rec_id!r}: non-finite embedding value")
        id_bytes = rec_id.encode("utf-8")
        body.append(struct.pack("<H", len(id_bytes)))
        body.append(id_bytes)
        body.append(struct.pack("<I", matrix.shape[0]))
        body.append(matrix.tobytes())
        count += 1
    header = _HEADER.pack(MAGIC, VERSION, 1 if multi_vector else 0, dim, count)
    Path(path).write_bytes(header + b"".join(body))
    return count


def write_sidecar(rows: Iterable[Mapping[str, object]], path: str | Path) -> None:
    """One JSON object per line; caller-provided tags pass through verbatim."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(dict(row), ensure_ascii=False, sort_keys=True) + "\n")
