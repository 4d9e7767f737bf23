# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. ``_kernels_py`` mirrors every function here."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def shapley_from_table(const double[:, ::1] table, int m):
    """Exact Shapley values from a dense ``(2**m, T)`` table indexed by bitmask."""
    cdef Py_ssize_t n_sub = table.shape[0], n_t = table.shape[1]
    cdef Py_ssize_t mask, t
    cdef int j, k, pc
    cdef double w
    cdef double[::1] weight = np.empty(m, dtype=np.float64)
    out = np.zeros((n_t, m), dtype=np.float64)
    cdef double[:, ::1] phi = out
    if n_sub != (<Py_ssize_t>1) << m:
        raise ValueError("table must have 2**m rows")
    # weight[k] = 1 / (m * C(m-1, k))
    w = 1.0
    for k in range(m):
        weight[k] = 1.0 / (m * w)
        w = w * (m - 1 - k) / (k + 1)
    for mask in range(n_sub):
        pc = 0
        for j in range(m):
            if (mask >> j) & 1:
                pc += 1
        if pc == m:
            continue
        w = weight[pc]
        for j in range(m):
            if not (mask >> j) & 1:
                for t in range(n_t):
                    phi[t, j] += w * (table[mask | (<Py_ssize_t>1 << j), t] - table[mask, t])
    return out


def bootstrap_not_better(const double[::1] diff, const cnp.int64_t[:, ::1] idx):
    """Count resamples whose summed ``a - b`` difference is <= 0."""
    cdef Py_ssize_t r, i, n_rep = idx.shape[0], n = idx.shape[1]
    cdef double s
    cdef long count = 0
    for r in range(n_rep):
        s = 0.0
        for i in range(n):
            s += diff[idx[r, i]]
        if s <= 0.0:
            count += 1
    return count


def nb_predict(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] tokens,
               const double[::1] counts, const double[:, ::1] log_prob,
               const double[::1] log_prior):
    """Argmax class per document for a multinomial count model.

    Documents are CSR rows over token ids; ``log_prob`` is ``(V, C)``.
    Ties go to the smallest class column.
    """
    cdef Py_ssize_t n_docs = indptr.shape[0] - 1, n_cls = log_prior.shape[0]
    cdef Py_ssize_t d, p, c, best
    cdef double[::1] acc = np.empty(n_cls, dtype=np.float64)
    out = np.empty(n_docs, dtype=np.int64)
    cdef cnp.int64_t[::1] pred = out
    for d in range(n_docs):
        for c in range(n_cls):
            acc[c] = log_prior[c]
        for p in range(indptr[d], indptr[d + 1]):
            for c in range(n_cls):
                acc[c] += counts[p] * log_prob[tokens[p], c]
        best = 0
        for c in range(1, n_cls):
            if acc[c] > acc[best]:
                best = c
        pred[d] = best
    return out


def centroid_predict(const double[:, ::1] x, const double[:, ::1] centroids):
    """Index of the nearest centroid (squared Euclidean), ties to the smallest."""
    cdef Py_ssize_t n = x.shape[0], dim = x.shape[1], n_cls = centroids.shape[0]
    cdef Py_ssize_t i, c, k, best
    cdef double dist, diff, best_dist
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] pred = out
    for i in range(n):
        best = 0
        best_dist = 0.0
        for c in range(n_cls):
            dist = 0.0
            for k in range(dim):
                diff = x[i, k] - centroids[c, k]
                dist += diff * diff
            if c == 0 or dist < best_dist:
                best = c
                best_dist = dist
        pred[i] = best
    return out
