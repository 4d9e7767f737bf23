"""Stratified per-source subsampling, reproducible per (subset, seed)."""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .game import InvalidInputError, SubsetKey

__all__ = ["SampleSpec", "TrainBundle", "stratified_sample", "subset_seed", "sample_size"]

_U64 = 2**64


@dataclass(frozen=True)
class SampleSpec:
    rate: float = 1.0
    base_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise InvalidInputError(f"sample rate must be in (0, 1], got {self.rate}")
        if not 0 <= self.base_seed < _U64:
            raise InvalidInputError(f"base_seed must be an unsigned 64-bit integer, got {self.base_seed}")


@dataclass(frozen=True)
class TrainBundle:
    """Selected instance indices per source, in subset order."""

    per_source: tuple[tuple[int, tuple[int, ...]], ...]

    def sources(self) -> list[int]:
        return [s for s, _ in self.per_source]

    def __len__(self) -> int:
        return sum(len(ix) for _, ix in self.per_source)

    def to_wire(self, names: Sequence[str]) -> list[dict]:
        return [{"source": names[s], "indices": list(ix)} for s, ix in self.per_source]


def _hash64(*parts: bytes) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(struct.pack("<Q", len(p)))
        h.update(p)
    return int.from_bytes(h.digest(), "little")


def subset_seed(base_seed: int, key: SubsetKey) -> int:
    """64-bit seed of the draw bound to ``key``; recorded alongside cached scores."""
    return _hash64(struct.pack("<Q", base_seed), key.to_bytes())


def _stream_seed(base_seed: int, key: SubsetKey, source: int) -> int:
    return _hash64(struct.pack("<Q", base_seed), key.to_bytes(), struct.pack("<I", source))


def sample_size(rate: float, n: int) -> int:
    # round away float noise such as 0.3 * 10 = 3.0000000000000004 before ceil
    return min(n, max(1, math.ceil(round(rate * n, 9))))


def stratified_sample(key: SubsetKey, sizes: Sequence[int], spec: SampleSpec) -> TrainBundle:
    """Draw ``ceil(rate * n_x)`` distinct indices from every source ``x`` in ``key``.

    ``sizes[x]`` is the instance count of source ``x``. Each stratum uses its
    own generator seeded from ``(base_seed, key, x)``; ``rate == 1`` returns
    every index in load order.
    """
    if len(key) == 0:
        raise InvalidInputError("cannot sample an empty subset")
    per_source = []
    for x in key.members:
        if x >= len(sizes):
            raise InvalidInputError(f"no corpus for source index {x}")
        n = int(sizes[x])
        if spec.rate >= 1.0:
            chosen = tuple(range(n))
        else:
            rng = np.random.Generator(np.random.PCG64(_stream_seed(spec.base_seed, key, x)))
            k = sample_size(spec.rate, n)
            chosen = tuple(sorted(int(i) for i in rng.choice(n, size=k, replace=False)))
        per_source.append((x, chosen))
    return TrainBundle(tuple(per_source))
