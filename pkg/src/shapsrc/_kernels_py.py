"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

from math import comb

import numpy as np
from scipy import sparse


def shapley_from_table(table, m):
    table = np.asarray(table, dtype=np.float64)
    if table.shape[0] != 1 << m:
        raise ValueError("table must have 2**m rows")
    masks = np.arange(1 << m)
    popcount = np.zeros(1 << m, dtype=np.int64)
    for j in range(m):
        popcount += (masks >> j) & 1
    weight = np.array([1.0 / (m * comb(m - 1, k)) for k in range(m)] + [0.0])
    phi = np.zeros((table.shape[1], m))
    for j in range(m):
        without = masks[((masks >> j) & 1) == 0]
        diff = table[without | (1 << j)] - table[without]
        phi[:, j] = weight[popcount[without]] @ diff
    return phi


def bootstrap_not_better(diff, idx):
    sums = np.asarray(diff, dtype=np.float64)[idx].sum(axis=1)
    return int(np.count_nonzero(sums <= 0.0))


def nb_predict(indptr, tokens, counts, log_prob, log_prior):
    n_docs = len(indptr) - 1
    x = sparse.csr_matrix((counts, tokens, indptr), shape=(n_docs, log_prob.shape[0]))
    scores = x @ log_prob + log_prior
    return np.asarray(np.argmax(scores, axis=1), dtype=np.int64).reshape(-1)


def centroid_predict(x, centroids):
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1).astype(np.int64)
