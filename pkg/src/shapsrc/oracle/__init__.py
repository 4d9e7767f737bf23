"""Score oracles: the subset -> per-target score black box."""

from .base import Oracle
from .builtin import KINDS, BuiltinOracle, builtin_train_and_score
from .corpus import Instance, SourceCorpus, TargetCorpus, load_jsonl
from .external import Endpoint, ExternalOracle, external_score
from .tabular import TabularGame, TabularOracle, synthetic_score

__all__ = [
    "Oracle", "KINDS", "BuiltinOracle", "builtin_train_and_score", "Instance", "SourceCorpus",
    "TargetCorpus", "load_jsonl", "Endpoint", "ExternalOracle", "external_score", "TabularGame",
    "TabularOracle", "synthetic_score",
]
