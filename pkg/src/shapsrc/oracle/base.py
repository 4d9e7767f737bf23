from __future__ import annotations

from typing import Sequence

import numpy as np

from ..game import SubsetKey
from ..sampler import SampleSpec


class Oracle:
    """Black box mapping a source subset to one score per target.

    Subclasses implement :meth:`evaluate`. Implementations must be
    deterministic in ``(key, spec)`` and safe to call from several threads
    for distinct keys.
    """

    source_names: Sequence[str]
    target_names: Sequence[str]
    score_range: tuple[float, float] = (0.0, 1.0)
    #: whether :meth:`evaluate` needs the instance sizes for stratified sampling
    uses_samples: bool = True

    @property
    def n_sources(self) -> int:
        return len(self.source_names)

    @property
    def n_targets(self) -> int:
        return len(self.target_names)

    @property
    def span(self) -> float:
        lo, hi = self.score_range
        return hi - lo

    def evaluate(self, key: SubsetKey, spec: SampleSpec) -> np.ndarray:
        raise NotImplementedError

    def empty_score(self) -> np.ndarray:
        """Score of a model trained on nothing."""
        raise NotImplementedError

    def random_score(self) -> np.ndarray:
        """Score of an untrained (randomly guessing) model."""
        return self.empty_score()

    def describe(self) -> dict:
        return {"type": type(self).__name__}

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
