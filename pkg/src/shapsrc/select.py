"""Turning source values into a chosen source subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .game import InvalidInputError, SubsetKey, full_key, make_subset_key
from .oracle.base import Oracle
from .sampler import SampleSpec
from .shapley.cache import SubsetScoreCache
from .shapley.engine import Evaluator

__all__ = ["DEFAULT_THRESHOLDS", "SelectionReport", "select_topk", "select_threshold", "tune_threshold"]

DEFAULT_THRESHOLDS = (1e-2, 5e-3, 1e-3)


@dataclass
class SelectionReport:
    chosen: list[int]
    theta_used: float | None
    dev_scores: dict[float, list[float]] = field(default_factory=dict)
    fallback_all: bool = False
    all_sources_score: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.chosen:
            raise InvalidInputError("a selection must contain at least one source")

    def to_json(self) -> dict:
        return {
            "chosen": list(self.chosen),
            "theta_used": self.theta_used,
            "dev_scores": {repr(k): v for k, v in self.dev_scores.items()},
            "fallback_all": self.fallback_all,
            "all_sources_score": self.all_sources_score,
        }


def select_topk(values: Sequence[float], k: int) -> list[int]:
    """The ``k`` highest-valued sources, best first; ties by smaller index."""
    v = np.asarray(values, dtype=float)
    if not 1 <= k <= len(v):
        raise InvalidInputError(f"k must be in [1, {len(v)}], got {k}")
    order = np.lexsort((np.arange(len(v)), -v))
    return [int(i) for i in order[:k]]


def select_threshold(values: Sequence[float], theta: float) -> list[int]:
    """Sources whose value is strictly greater than ``theta``, in index order."""
    return [i for i, x in enumerate(values) if x > theta]


def tune_threshold(values: Sequence[float], candidates: Sequence[float], oracle: Oracle,
                   dev_target: int = 0, sample_spec: SampleSpec | None = None,
                   cache: SubsetScoreCache | None = None) -> SelectionReport:
    """Pick the threshold whose selected subset scores best on the dev target.

    Only thresholds that select a non-empty proper subset are trained. When
    no such subset strictly beats all sources, all sources are returned with
    ``fallback_all`` set. Equal dev scores prefer the larger threshold.
    """
    if not len(candidates):
        raise InvalidInputError("need at least one threshold candidate")
    m = oracle.n_sources
    if len(values) != m:
        raise InvalidInputError(f"got {len(values)} values for {m} sources")
    ev = Evaluator(oracle, sample_spec or SampleSpec(), cache)
    everything = full_key(m)
    base = float(ev(everything)[dev_target])
    dev_scores: dict[float, list[float]] = {}
    best: tuple[float, float, SubsetKey] | None = None
    for theta in sorted(set(float(c) for c in candidates), reverse=True):
        chosen = select_threshold(values, theta)
        if not chosen or len(chosen) == m:
            continue
        scores = ev(make_subset_key(chosen, m))
        dev_scores[theta] = [float(s) for s in scores]
        s = float(scores[dev_target])
        if best is None or s > best[0]:
            best = (s, theta, make_subset_key(chosen, m))
    all_score = [float(s) for s in ev(everything)]
    if best is None or best[0] <= base:
        return SelectionReport(list(range(m)), None, dev_scores, True, all_score)
    return SelectionReport(list(best[2].members), best[1], dev_scores, False, all_score)
