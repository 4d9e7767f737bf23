"""Permutation-sampling Shapley estimator over source corpora.

Each epoch walks a random permutation of the sources, scoring the growing
prefix with a stratified sample of its corpora. Prefix scores are cached by
subset, the first step starts from a configurable initial score instead of
the empty-model score, and steps are skipped (truncated) once the running
score is within ``tolerance`` of the full-sample score.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..game import InvalidInputError, OracleFailure, SubsetKey, ValuationResult, full_key
from ..oracle.base import Oracle
from ..sampler import SampleSpec, subset_seed
from .cache import SubsetScoreCache

log = logging.getLogger(__name__)

RHO_POLICIES = ("Random", "FracSingle", "Const", "AllHalf", "All", "Mu", "EmptyScore")


@dataclass(frozen=True)
class Rho:
    """Initial-score policy; ``value`` is only used by ``Const``."""

    policy: str = "EmptyScore"
    value: float | None = None

    def __post_init__(self):
        if self.policy not in RHO_POLICIES:
            raise InvalidInputError(f"unknown rho policy {self.policy!r}; expected one of {RHO_POLICIES}")
        if (self.policy == "Const") != (self.value is not None):
            raise InvalidInputError("rho value is required for Const and only for Const")

    @classmethod
    def const(cls, c: float) -> "Rho":
        return cls("Const", float(c))


@dataclass(frozen=True)
class EngineConfig:
    nepoch: int = 100
    tolerance: float = 0.0
    rho: Rho = field(default_factory=Rho)
    sample_spec: SampleSpec = field(default_factory=SampleSpec)
    window: int = 10
    #: ``None`` means 1e-3 times the oracle's score range; 0 disables the test
    epsilon: float | None = None
    seed: int = 0
    use_cache: bool = True
    #: epochs dispatched together; fixed so results do not depend on worker count
    epoch_block: int = 16

    def __post_init__(self):
        if self.nepoch < 1:
            raise InvalidInputError("nepoch must be at least 1")
        if self.tolerance < 0:
            raise InvalidInputError("tolerance must be non-negative")
        if self.window < 1:
            raise InvalidInputError("convergence window must be at least 1")
        if self.epsilon is not None and self.epsilon < 0:
            raise InvalidInputError("epsilon must be non-negative")
        if self.epoch_block < 1:
            raise InvalidInputError("epoch_block must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")

    def with_seed(self, seed: int) -> "EngineConfig":
        return replace(self, seed=seed, sample_spec=replace(self.sample_spec, base_seed=seed))


class Evaluator:
    """Scores subsets through an oracle, a sample spec and a shared cache."""

    def __init__(self, oracle: Oracle, spec: SampleSpec, cache: SubsetScoreCache | None = None):
        self.oracle = oracle
        self.spec = spec
        self.cache = cache if cache is not None else SubsetScoreCache(oracle.n_sources, oracle.n_targets)

    def __call__(self, key: SubsetKey) -> np.ndarray:
        if len(key) == 0:
            raise InvalidInputError("the empty subset is never trained; use an initial-score policy")
        return self.cache.get(key, lambda: self.oracle.evaluate(key, self.spec),
                              seed=subset_seed(self.spec.base_seed, key))

    @property
    def trainings(self) -> int:
        return self.cache.misses


def resolve_rho(rho: Rho, oracle: Oracle | None, evaluate=None, n_targets: int | None = None) -> np.ndarray:
    """Per-target initial score for the first step of every permutation.

    ``evaluate`` scores non-empty subsets (defaults to an uncached
    :class:`Evaluator` over ``oracle`` at full sampling).
    """
    if rho.policy == "Const":
        if oracle is not None:
            lo, hi = oracle.score_range
            if not lo <= rho.value <= hi:
                raise InvalidInputError(f"Const rho {rho.value} outside score range {[lo, hi]}")
            n_targets = oracle.n_targets
        if n_targets is None:
            raise InvalidInputError("Const rho needs an oracle or an explicit target count")
        return np.full(n_targets, rho.value)
    if oracle is None:
        raise InvalidInputError(f"rho policy {rho.policy} needs an oracle")
    if rho.policy == "EmptyScore":
        return np.array(oracle.empty_score(), dtype=float)
    if rho.policy == "Random":
        return np.array(oracle.random_score(), dtype=float)
    if evaluate is None:
        evaluate = Evaluator(oracle, SampleSpec())
    m = oracle.n_sources
    if rho.policy in ("All", "AllHalf"):
        full = np.array(evaluate(full_key(m)))
        return full if rho.policy == "All" else full / 2.0
    singles = np.array([evaluate(SubsetKey((j,))) for j in range(m)])
    if rho.policy == "FracSingle":
        return (m - 1) / m * singles.mean(axis=0)
    # Mu: mean of the all-sources score and every single-source score
    return np.vstack([evaluate(full_key(m))[None, :], singles]).mean(axis=0)


class _Walker:
    def __init__(self, evaluate: Evaluator, m: int, full: np.ndarray, rho: np.ndarray,
                 tolerance: float, seed: int):
        self.evaluate = evaluate
        self.m = m
        self.full = full
        self.rho = rho
        self.tolerance = tolerance
        self.seed = seed

    def permutation(self, epoch: int) -> np.ndarray:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, epoch])))
        return rng.permutation(self.m)

    def __call__(self, epoch: int) -> tuple[np.ndarray, int]:
        perm = self.permutation(epoch)
        marginals = np.zeros((len(self.rho), self.m))
        prev = self.rho
        members: list[int] = []
        truncated = 0
        for src in perm:
            members.append(int(src))
            skip = np.abs(self.full - prev) < self.tolerance
            truncated += int(skip.sum())
            if skip.all():
                cur = prev
            else:
                scores = self.evaluate(SubsetKey(tuple(sorted(members))))
                cur = np.where(skip, prev, scores)
            marginals[:, src] = cur - prev
            prev = cur
        return marginals, truncated


def seal_shap(oracle: Oracle, config: EngineConfig, *, workers: int = 1,
              cache: SubsetScoreCache | None = None) -> ValuationResult:
    """Estimate per-target Shapley values of every source of ``oracle``.

    Runs until the running estimate moves less than ``epsilon`` over the last
    ``window`` epochs or ``nepoch`` epochs have been folded. Results depend
    only on ``(oracle, config)``: epochs are seeded individually and folded in
    order regardless of ``workers``.

    An :class:`OracleFailure` propagates with a ``partial`` attribute holding
    the counters and estimate at the time of failure.
    """
    m, n_t = oracle.n_sources, oracle.n_targets
    if m < 1:
        raise InvalidInputError("need at least one source")
    if n_t < 1:
        raise InvalidInputError("need at least one target")
    if cache is None:
        cache = SubsetScoreCache(m, n_t, enabled=config.use_cache)
    epsilon = 1e-3 * oracle.span if config.epsilon is None else config.epsilon
    evaluate = Evaluator(oracle, config.sample_spec, cache)
    started = time.perf_counter()
    phi = np.zeros((n_t, m))
    history: list[np.ndarray] = []
    max_change: list[float] = []
    truncations = 0
    t = 0
    converged = False
    full = rho = None
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        full = np.array(evaluate(full_key(m)))
        rho = resolve_rho(config.rho, oracle, evaluate)
        walker = _Walker(evaluate, m, full, rho, config.tolerance, config.seed)
        while t < config.nepoch and not converged:
            block = range(t + 1, min(t + config.epoch_block, config.nepoch) + 1)
            if pool is None:
                outcomes = [walker(e) for e in block]
            else:
                outcomes = list(pool.map(walker, block))
            for marginals, truncated in outcomes:
                t += 1
                phi = (t - 1) / t * phi + 1.0 / t * marginals
                history.append(phi)
                truncations += truncated
                if t > config.window:
                    change = float(np.max(np.abs(phi - history[t - 1 - config.window])))
                    max_change.append(change)
                    if change < epsilon:
                        converged = True
                        break
                else:
                    max_change.append(float("nan"))
    except OracleFailure as exc:
        exc.partial = {
            "epochs_run": t, "values": phi.tolist(), "cache_hits": cache.hits,
            "cache_misses": cache.misses, "oracle_trainings": cache.misses,
        }
        raise
    finally:
        if pool is not None:
            pool.shutdown(wait=True, cancel_futures=True)
    log.info("valuation finished after %d epochs (converged=%s, trainings=%d, hits=%d)",
             t, converged, cache.misses, cache.hits)
    return ValuationResult(
        values=phi, epochs_run=t, converged=converged, cache_hits=cache.hits,
        cache_misses=cache.misses, oracle_trainings=cache.misses, seed=config.seed,
        truncations=truncations, full_score=full, rho=rho, history=np.array(history),
        max_change=max_change, wall_time=time.perf_counter() - started,
        source_names=list(oracle.source_names), target_names=list(oracle.target_names),
    )
