"""Deterministic random streams.

Every random draw in the toolkit comes from a Philox4x64 generator whose
128-bit key is the first 16 bytes of ``SHA-256(f"{seed}/{label}/...")``.
Streams are re-derived per entity (query id, record id, ...) instead of
sharing a counter, so generation order never changes results and the
same (seed, labels) pair yields the same stream in any process.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream(seed: int, *labels: str | int) -> np.random.Generator:
    """Return the generator for one entity's private stream."""
    tag = "/".join(str(part) for part in (seed, *labels))
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
