"""Reference valuations to compare the Monte-Carlo estimates against."""

from __future__ import annotations

import numpy as np

from ..game import InvalidInputError, SubsetKey, full_key
from ..oracle.base import Oracle
from ..sampler import SampleSpec
from .cache import SubsetScoreCache
from .engine import Evaluator


def _evaluator(oracle, sample_spec, cache):
    return Evaluator(oracle, sample_spec or SampleSpec(), cache)


def baseline_single(oracle: Oracle, sample_spec: SampleSpec | None = None,
                    cache: SubsetScoreCache | None = None) -> np.ndarray:
    """Score of each source trained alone, shape ``(n_targets, m)``."""
    ev = _evaluator(oracle, sample_spec, cache)
    return np.array([ev(SubsetKey((j,))) for j in range(oracle.n_sources)]).T


def baseline_loo(oracle: Oracle, sample_spec: SampleSpec | None = None,
                 cache: SubsetScoreCache | None = None) -> np.ndarray:
    """Drop in score when each source alone is left out of the full set."""
    m = oracle.n_sources
    if m < 2:
        raise InvalidInputError("leave-one-out needs at least two sources")
    ev = _evaluator(oracle, sample_spec, cache)
    full = ev(full_key(m))
    return np.array([full - ev(full_key(m).without(j)) for j in range(m)]).T


def baseline_random(m: int, seed: int) -> np.ndarray:
    """``m`` uniform draws in [0, 1)."""
    return np.random.Generator(np.random.PCG64(seed)).uniform(size=m)


def greedy_dfs(oracle: Oracle, target: int, k: int, sample_spec: SampleSpec | None = None,
               cache: SubsetScoreCache | None = None) -> list[int]:
    """Grow a source list greedily by the best score of ``chosen + [x]``.

    Ties go to the smallest source index.
    """
    m = oracle.n_sources
    if not 1 <= k <= m:
        raise InvalidInputError(f"k must be in [1, {m}], got {k}")
    if not 0 <= target < oracle.n_targets:
        raise InvalidInputError(f"target index {target} out of range")
    ev = _evaluator(oracle, sample_spec, cache)
    chosen: list[int] = []
    key = SubsetKey(())
    for _ in range(k):
        best, best_score = -1, -np.inf
        for x in range(m):
            if x in key:
                continue
            s = ev(key.with_member(x))[target]
            if s > best_score:
                best, best_score = x, s
        chosen.append(best)
        key = key.with_member(best)
    return chosen
