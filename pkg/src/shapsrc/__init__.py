"""Source-corpus valuation: approximate Shapley values of training corpora
for transfer to one or more target corpora."""

from .game import (InvalidInputError, OracleFailure, SourceId, SubsetKey, ValuationResult,
                   make_subset_key)
from .kernels import BACKEND
from .sampler import SampleSpec, TrainBundle, stratified_sample
from .shapley import EngineConfig, Rho, exact_shapley, seal_shap

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "EngineConfig", "InvalidInputError", "OracleFailure", "Rho", "SampleSpec",
    "SourceId", "SubsetKey", "TrainBundle", "ValuationResult", "exact_shapley", "make_subset_key",
    "seal_shap", "stratified_sample",
]
