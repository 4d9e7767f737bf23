"""Domain types shared by every module: source identity, canonical subset keys,
score vectors and valuation results."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "InvalidInputError",
    "OracleFailure",
    "SourceId",
    "SubsetKey",
    "make_subset_key",
    "full_key",
    "as_score_vector",
    "ValuationResult",
]


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class OracleFailure(RuntimeError):
    """A score oracle died, timed out or broke its output contract.

    ``payload`` carries the raw response (or stderr tail) for diagnosis.
    """

    def __init__(self, message: str, payload: object = None):
        super().__init__(message)
        self.payload = payload


@dataclass(frozen=True, order=True)
class SourceId:
    index: int
    name: str

    def __post_init__(self):
        if self.index < 0:
            raise InvalidInputError(f"source index must be non-negative, got {self.index}")
        if not self.name:
            raise InvalidInputError("source name must be non-empty")


def make_source_ids(names: Sequence[str]) -> list[SourceId]:
    """Dense ids ``0..m-1`` for a list of unique names."""
    if len(set(names)) != len(names):
        raise InvalidInputError(f"source names must be unique: {list(names)}")
    return [SourceId(i, n) for i, n in enumerate(names)]


_COUNT = struct.Struct("<I")


@dataclass(frozen=True)
class SubsetKey:
    """Canonical identity of an unordered set of source indices.

    ``members`` is sorted and duplicate-free; :meth:`to_bytes` gives a
    fixed-width little-endian layout (``uint32`` count followed by one
    ``uint32`` per member) that is also the on-disk cache key.
    """

    members: tuple[int, ...]
    mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = 0
        for i in self.members:
            m |= 1 << i
        object.__setattr__(self, "mask", m)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, index: object) -> bool:
        return isinstance(index, int) and index >= 0 and bool(self.mask >> index & 1)

    def to_bytes(self) -> bytes:
        n = len(self.members)
        return _COUNT.pack(n) + struct.pack(f"<{n}I", *self.members)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SubsetKey":
        (n,) = _COUNT.unpack_from(raw)
        if len(raw) != 4 * (n + 1):
            raise InvalidInputError(f"subset key of {len(raw)} bytes does not hold {n} members")
        members = struct.unpack_from(f"<{n}I", raw, 4)
        if any(b <= a for a, b in zip(members, members[1:])):
            raise InvalidInputError("encoded subset key is not sorted and duplicate-free")
        return cls(tuple(members))

    def with_member(self, index: int) -> "SubsetKey":
        if index in self:
            return self
        return SubsetKey(tuple(sorted(self.members + (index,))))

    def without(self, index: int) -> "SubsetKey":
        return SubsetKey(tuple(i for i in self.members if i != index))


def _as_index(member) -> int:
    if isinstance(member, SourceId):
        return member.index
    if isinstance(member, (int, np.integer)) and not isinstance(member, bool):
        return int(member)
    raise InvalidInputError(f"subset members must be source ids or ints, got {member!r}")


def make_subset_key(members: Iterable, m: int | None = None) -> SubsetKey:
    """Canonicalize ``members`` into a :class:`SubsetKey`.

    When ``m`` is given, every index must lie in ``range(m)``.
    """
    idx = [_as_index(x) for x in members]
    if len(set(idx)) != len(idx):
        raise InvalidInputError(f"duplicate source index in subset {idx}")
    for i in idx:
        if i < 0 or (m is not None and i >= m):
            raise InvalidInputError(f"source index {i} outside universe of {m} sources")
    return SubsetKey(tuple(sorted(idx)))


def full_key(m: int) -> SubsetKey:
    return SubsetKey(tuple(range(m)))


def as_score_vector(scores, n_targets: int | None = None) -> np.ndarray:
    """Validate and freeze one score per target as a read-only float array."""
    arr = np.array(scores, dtype=float).reshape(-1)
    if n_targets is not None and arr.shape[0] != n_targets:
        raise InvalidInputError(f"expected {n_targets} scores, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"scores must be finite, got {arr.tolist()}")
    arr.setflags(write=False)
    return arr


@dataclass
class ValuationResult:
    """Output of :func:`shapsrc.shapley.seal_shap`.

    ``values`` has shape ``(n_targets, n_sources)``. ``history`` holds the
    running estimate after every folded epoch, shape
    ``(epochs_run, n_targets, n_sources)``.
    """

    values: np.ndarray
    epochs_run: int
    converged: bool
    cache_hits: int
    cache_misses: int
    oracle_trainings: int
    seed: int
    truncations: int = 0
    full_score: np.ndarray | None = None
    rho: np.ndarray | None = None
    history: np.ndarray | None = None
    max_change: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    source_names: list[str] = field(default_factory=list)
    target_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise InvalidInputError("values must be a [target x source] matrix")
        if self.epochs_run < 1:
            raise InvalidInputError("epochs_run must be at least 1")

    def for_target(self, t: int = 0) -> np.ndarray:
        return self.values[t]
