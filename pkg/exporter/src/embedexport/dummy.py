"""Deterministic dummy encoder.

Gives format-conformance tests real files without model weights. Every
vector is derived from an integer hash: SHA-256 of a namespaced unit
string expands to fixed rational components ((u mod 2001 - 1000) / 1000
for consecutive little-endian u32 words), cast to float32. No float
nondeterminism enters the pipeline, so exports are bit-stable across
machines; optional l2 normalization uses IEEE-exact division and stays
reproducible.

Text records get one vector per whitespace token (at least one), so
multi-vector jobs exercise ragged layouts; image units are hashes of the
file bytes.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np


def _component_words(unit: str, dim: int) -> list[int]:
    words: list[int] = []
    block = 0
    while len(words) < dim:
        digest = hashlib.sha256(f"{unit}/{block}".encode("utf-8")).digest()
        words.extend(struct.unpack("<8I", digest))
        block += 1
    return words[:dim]


def vector_for(unit: str, dim: int, normalize: bool) -> np.ndarray:
    components = np.array(
        [((w % 2001) - 1000) / 1000.0 for w in _component_words(unit, dim)],
        dtype=np.float32)
    if normalize:
        norm = np.linalg.norm(components.astype(np.float64))
        if norm > 0:
            components = (components / norm).astype(np.float32)
    return components


def encode_text(text: str, dim: int, multi_vector: bool, normalize: bool) -> np.ndarray:
    """Token matrix for one text: one vector per whitespace token."""
    if multi_vector:
        tokens = text.split() or [text]
        rows = [vector_for(f"dummy-text/{text}/{i}/{tok}", dim, normalize)
                for i, tok in enumerate(tokens)]
        return np.stack(rows)
    return vector_for(f"dummy-text/{text}", dim, normalize)[None, :]


def encode_image_bytes(payload: bytes, dim: int, normalize: bool) -> np.ndarray:
    unit = hashlib.sha256(payload).hexdigest()
    return vector_for(f"dummy-image/{unit}", dim, normalize)[None, :]
