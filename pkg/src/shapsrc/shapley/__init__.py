"""Shapley valuation engines: exact enumeration, the cached Monte-Carlo
estimator and baseline valuations."""

from .baselines import baseline_loo, baseline_random, baseline_single, greedy_dfs
from .cache import SubsetScoreCache
from .engine import RHO_POLICIES, EngineConfig, Evaluator, Rho, resolve_rho, seal_shap
from .exact import MAX_EXACT_SOURCES, exact_shapley

__all__ = [
    "baseline_loo", "baseline_random", "baseline_single", "greedy_dfs", "SubsetScoreCache",
    "RHO_POLICIES", "EngineConfig", "Evaluator", "Rho", "resolve_rho", "seal_shap",
    "MAX_EXACT_SOURCES", "exact_shapley",
]
