# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the kernels in ``_numpy_impl``.

The irregular loops (ragged MaxSim, early-exit dedup scan, pairwise
silhouette accumulation) dominate runtime on large pools; these versions
avoid the per-candidate Python dispatch the numpy fallback pays.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "cython"


def maxsim_scores(const cnp.float32_t[:, ::1] query_tokens,
                  const cnp.float32_t[:, ::1] flat_tokens,
                  const cnp.int64_t[::1] offsets):
    # dense similarities via BLAS, ragged max/sum reduction in one C pass
    sims_arr = np.asarray(query_tokens, dtype=np.float64) @ \
        np.asarray(flat_tokens, dtype=np.float64).T
    cdef cnp.float64_t[:, ::1] sims = np.ascontiguousarray(sims_arr)
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t tq = sims.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t c, q, t, lo, hi
    cdef double best, total
    for c in range(n):
        lo = offsets[c]
        hi = offsets[c + 1]
        total = 0.0
        for q in range(tq):
            best = sims[q, lo]
            for t in range(lo + 1, hi):
                if sims[q, t] > best:
                    best = sims[q, t]
            total += best
        out[c] = total
    return out


def greedy_dedup(const cnp.float32_t[:, ::1] vectors, double threshold):
    cdef Py_ssize_t n = vectors.shape[0]
    cdef Py_ssize_t d = vectors.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] kept_mask = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] witness = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] similarity = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] kept_rows = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] kept_view = kept_rows
    cdef cnp.uint8_t[::1] mask_view = kept_mask
    cdef cnp.int64_t[::1] wit_view = witness
    cdef cnp.float64_t[::1] sim_view = similarity
    cdef Py_ssize_t n_kept = 0
    cdef Py_ssize_t i, j, k, row
    cdef double sim
    cdef bint dropped
    for i in range(n):
        dropped = False
        for j in range(n_kept):
            row = kept_view[j]
            sim = 0.0
            for k in range(d):
                sim += <double>vectors[row, k] * <double>vectors[i, k]
            if sim >= threshold:
                wit_view[i] = row
                sim_view[i] = sim
                dropped = True
                break
        if not dropped:
            mask_view[i] = 1
            kept_view[n_kept] = i
            n_kept += 1
    return kept_mask.astype(bool), witness, similarity


def silhouette_sums(const cnp.float64_t[:, ::1] points,
                    const cnp.int64_t[::1] labels,
                    Py_ssize_t n_labels,
                    bint cosine):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sums = np.zeros((n, n_labels), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] sums_view = sums
    cdef cnp.ndarray[cnp.float64_t, ndim=1] norms_arr
    cdef cnp.float64_t[::1] norms
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, dist
    if cosine:
        norms_arr = np.linalg.norm(np.asarray(points), axis=1)
        norms_arr[norms_arr == 0.0] = 1.0
        norms = norms_arr
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    acc += points[i, k] * points[j, k]
                dist = 1.0 - acc / (norms[i] * norms[j])
                sums_view[i, labels[j]] += dist
                sums_view[j, labels[i]] += dist
    else:
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = points[i, k] - points[j, k]
                    acc += diff * diff
                dist = sqrt(acc)
                sums_view[i, labels[j]] += dist
                sums_view[j, labels[i]] += dist
    return sums
