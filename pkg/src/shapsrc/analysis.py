"""Significance testing and agreement metrics for comparing valuations."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import stats

from . import kernels
from .game import InvalidInputError

__all__ = ["paired_bootstrap", "rank_agreement", "UndefinedCorrelation"]


class UndefinedCorrelation(InvalidInputError):
    pass


def paired_bootstrap(pred_a: Sequence, pred_b: Sequence, n_samples: int = 10_000, seed: int = 0) -> float:
    """Paired bootstrap p-value that system ``a`` is not better than ``b``.

    ``pred_a`` and ``pred_b`` are per-example correctness flags (or scores).
    Example indices are resampled with replacement; the p-value is the
    fraction of resamples in which ``mean(a) <= mean(b)``.
    """
    a = np.asarray(pred_a, dtype=float)
    b = np.asarray(pred_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise InvalidInputError("correctness vectors must be 1-D, non-empty and of equal length")
    if n_samples < 1:
        raise InvalidInputError("n_samples must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, len(a), size=(n_samples, len(a)), dtype=np.int64)
    return kernels.bootstrap_not_better(np.ascontiguousarray(a - b), idx) / n_samples


def rank_agreement(values_a: Sequence[float], values_b: Sequence[float]) -> tuple[float, float]:
    """``(spearman, pearson)`` correlation; ties get average ranks."""
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise InvalidInputError("need two equal-length vectors of at least two values")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedCorrelation("correlation is undefined for a constant vector")
    spearman = stats.spearmanr(a, b).statistic
    pearson = stats.pearsonr(a, b).statistic
    return float(np.clip(spearman, -1, 1)), float(np.clip(pearson, -1, 1))
