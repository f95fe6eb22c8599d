"""Pure-numpy implementations of the hot kernels.

Mirror of ``_fast.pyx``; used when the compiled extension is missing or
when ``BIASLENS_PURE_PYTHON`` is set. Same signatures, same semantics.
Dense single-vector scoring is a BLAS matmul either way and lives in
``retrieval``; only the irregular loops are routed through this layer.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def maxsim_scores(query_tokens, flat_tokens, offsets):
    """Late-interaction score of one query against ragged candidates.

    ``query_tokens`` is (t_q, d); candidate token matrices are stacked into
    ``flat_tokens`` (total_tokens, d) and delimited by ``offsets`` (n+1).
    Score of candidate c = sum over query tokens of the max dot product
    against c's tokens. Inner cosine is handled by normalizing inputs
    before the call. The dense part is one BLAS matmul; the ragged
    segment reduction is what the compiled twin accelerates.
    """
    sims = query_tokens.astype(np.float64) @ flat_tokens.astype(np.float64).T
    segment_max = np.maximum.reduceat(sims, offsets[:-1], axis=1)
    return segment_max.sum(axis=0)


def greedy_dedup(vectors, threshold):
    """Keep-first scan over rows (assumed l2-normalized, scan order fixed).

    Returns (kept_mask, witness, similarity): for each dropped row,
    ``witness`` holds the index of the first kept row whose cosine
    similarity reached the threshold; -1 and 0.0 for kept rows.
    """
    n = vectors.shape[0]
    kept_mask = np.zeros(n, dtype=bool)
    witness = np.full(n, -1, dtype=np.int64)
    similarity = np.zeros(n, dtype=np.float64)
    kept_rows: list[int] = []
    for i in range(n):
        dropped = False
        if kept_rows:
            sims = vectors[kept_rows] @ vectors[i]
            for j, sim in enumerate(sims):
                if sim >= threshold:
                    witness[i] = kept_rows[j]
                    similarity[i] = float(sim)
                    dropped = True
                    break
        if not dropped:
            kept_mask[i] = True
            kept_rows.append(i)
    return kept_mask, witness, similarity


def silhouette_sums(points, labels, n_labels, cosine):
    """Per-point sums of distances to every label group.

    Returns an (n, n_labels) float64 matrix S with
    S[i, g] = sum of distances from point i to all points of group g
    (self excluded, which contributes 0 anyway). ``cosine`` selects
    cosine distance (1 - cos) instead of euclidean.
    """
    pts = points.astype(np.float64, copy=False)
    if cosine:
        norms = np.linalg.norm(pts, axis=1)
        safe = np.where(norms == 0.0, 1.0, norms)
        unit = pts / safe[:, None]
        dist = 1.0 - unit @ unit.T
        np.fill_diagonal(dist, 0.0)
    else:
        sq = np.einsum("ij,ij->i", pts, pts)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
        np.maximum(d2, 0.0, out=d2)
        dist = np.sqrt(d2)
        np.fill_diagonal(dist, 0.0)
    sums = np.zeros((points.shape[0], n_labels), dtype=np.float64)
    for g in range(n_labels):
        sums[:, g] = dist[:, labels == g].sum(axis=1)
    return sums
