from __future__ import annotations

from typing import Callable

import numpy as np

from .. import kernels
from ..game import InvalidInputError, SubsetKey, as_score_vector

MAX_EXACT_SOURCES = 16


def exact_shapley(score: Callable[[SubsetKey], np.ndarray], m: int, empty_score=None) -> np.ndarray:
    """Exact Shapley values by enumerating all ``2**m`` subsets.

    ``score`` maps a subset to one value per target; ``empty_score``
    overrides the value of the empty subset (defaults to ``score`` of it).
    Returns a ``(n_targets, m)`` matrix.
    """
    if m > MAX_EXACT_SOURCES:
        raise InvalidInputError(
            f"exact Shapley over {m} sources needs 2**{m} subset scores; the limit is "
            f"{MAX_EXACT_SOURCES} sources, use the Monte-Carlo estimator instead")
    if m < 1:
        raise InvalidInputError("need at least one source")
    empty = as_score_vector(score(SubsetKey(())) if empty_score is None else empty_score)
    table = np.empty((1 << m, empty.shape[0]))
    table[0] = empty
    for mask in range(1, 1 << m):
        table[mask] = as_score_vector(score(SubsetKey(tuple(j for j in range(m) if mask >> j & 1))),
                                      empty.shape[0])
    return kernels.shapley_from_table(np.ascontiguousarray(table), m)
