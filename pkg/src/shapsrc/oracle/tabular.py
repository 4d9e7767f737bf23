"""Closed-form and tabulated cooperative games used as deterministic oracles."""

from __future__ import annotations

import time
from typing import Callable, Mapping, Sequence

import numpy as np

from ..game import InvalidInputError, SubsetKey, as_score_vector, make_subset_key
from ..sampler import SampleSpec
from .base import Oracle

__all__ = ["TabularGame", "TabularOracle", "synthetic_score"]


class TabularGame:
    """A game over ``m`` players given by a rule on subsets.

    ``rule`` receives a :class:`SubsetKey` and returns one value per target.
    Use the constructors (:meth:`additive`, :meth:`glove`, :meth:`from_table`,
    ...) rather than building rules by hand.
    """

    def __init__(self, m: int, rule: Callable[[SubsetKey], Sequence[float]], n_targets: int = 1,
                 name: str = "custom"):
        if m < 0:
            raise InvalidInputError("player count must be non-negative")
        self.m = m
        self.n_targets = n_targets
        self.name = name
        self._rule = rule

    def __call__(self, key: SubsetKey) -> np.ndarray:
        return as_score_vector(self._rule(key), self.n_targets)

    @property
    def empty(self) -> np.ndarray:
        return self(SubsetKey(()))

    def dense(self) -> np.ndarray:
        """All ``2**m`` values as a ``(2**m, T)`` array indexed by bitmask."""
        out = np.empty((1 << self.m, self.n_targets))
        for mask in range(1 << self.m):
            key = SubsetKey(tuple(j for j in range(self.m) if mask >> j & 1))
            out[mask] = self(key)
        return out

    # -- constructors -------------------------------------------------------

    @classmethod
    def additive(cls, weights, empty: float = 0.0) -> "TabularGame":
        """``v(S) = empty + sum of weights in S``; ``weights`` may be ``(T, m)``."""
        w = np.atleast_2d(np.asarray(weights, dtype=float))
        m = w.shape[1]
        return cls(m, lambda k: empty + w[:, list(k.members)].sum(axis=1), w.shape[0], "additive")

    @classmethod
    def glove(cls) -> "TabularGame":
        """Player 0 holds a left glove, players 1 and 2 right gloves."""
        return cls(3, lambda k: [1.0 if 0 in k and (1 in k or 2 in k) else 0.0], 1, "glove")

    @classmethod
    def dummy(cls, m: int, carrier: int = 0) -> "TabularGame":
        """``v(S) = 1`` iff ``carrier`` is in ``S``."""
        return cls(m, lambda k: [1.0 if carrier in k else 0.0], 1, "dummy")

    @classmethod
    def from_table(cls, m: int, table: Mapping, n_targets: int | None = None) -> "TabularGame":
        """Game from an explicit mapping of subsets to values.

        Keys may be :class:`SubsetKey`, iterables of indices, or strings such
        as ``"0,2"`` (``""`` is the empty set). Every one of the ``2**m``
        subsets must be present.
        """
        values: dict[SubsetKey, np.ndarray] = {}
        for raw, v in table.items():
            if isinstance(raw, SubsetKey):
                key = raw
            elif isinstance(raw, str):
                parts = [p for p in raw.replace(" ", "").split(",") if p]
                key = make_subset_key((int(p) for p in parts), m)
            else:
                key = make_subset_key(raw, m)
            values[key] = np.atleast_1d(np.asarray(v, dtype=float))
        if len(values) != 1 << m:
            raise InvalidInputError(f"table must define all {1 << m} subsets, got {len(values)}")
        t = n_targets if n_targets is not None else next(iter(values.values())).shape[0]
        return cls(m, values.__getitem__, t, "table")

    @classmethod
    def from_dense(cls, dense) -> "TabularGame":
        dense = np.asarray(dense, dtype=float)
        if dense.ndim == 1:
            dense = dense[:, None]
        m = int(dense.shape[0]).bit_length() - 1
        if dense.shape[0] != 1 << m:
            raise InvalidInputError("dense table needs a power-of-two row count")
        frozen = dense.copy()
        return cls(m, lambda k: frozen[k.mask], dense.shape[1], "dense")

    @classmethod
    def random(cls, m: int, rng: np.random.Generator, n_targets: int = 1) -> "TabularGame":
        """Uniform random values in [0, 1] on every subset, empty set included."""
        return cls.from_dense(rng.uniform(size=(1 << m, n_targets)))

    @classmethod
    def concave(cls, weights, scale: float = 1.0, rate: float = 3.0) -> "TabularGame":
        """Diminishing returns: ``scale * (1 - exp(-rate * sum of weights))``."""
        w = np.asarray(weights, dtype=float)
        return cls(len(w), lambda k: [scale * (1.0 - np.exp(-rate * w[list(k.members)].sum()))],
                   1, "concave")

    # -- algebra used by the axiom tests -----------------------------------

    def __add__(self, other: "TabularGame") -> "TabularGame":
        if (self.m, self.n_targets) != (other.m, other.n_targets):
            raise InvalidInputError("can only add games over the same players and targets")
        return TabularGame(self.m, lambda k: self(k) + other(k), self.n_targets, "sum")

    def affine(self, a: float, b: float) -> "TabularGame":
        return TabularGame(self.m, lambda k: a * self(k) + b, self.n_targets, "affine")


def synthetic_score(game: TabularGame, subset: SubsetKey) -> np.ndarray:
    """Value of ``subset`` under ``game``; pure, never trains anything."""
    if subset.members and subset.members[-1] >= game.m:
        raise InvalidInputError(f"subset {subset.members} outside a game of {game.m} players")
    return game(subset)


class TabularOracle(Oracle):
    """Adapts a :class:`TabularGame` to the engine's oracle interface.

    ``delay`` (seconds) simulates training cost; the sleep releases the GIL
    so concurrent evaluations overlap.
    """

    uses_samples = False

    def __init__(self, game: TabularGame, source_names: Sequence[str] | None = None,
                 target_names: Sequence[str] | None = None, delay: float = 0.0,
                 score_range: tuple[float, float] | None = None):
        self.game = game
        self.source_names = list(source_names or [f"s{j}" for j in range(game.m)])
        self.target_names = list(target_names or [f"t{t}" for t in range(game.n_targets)])
        if len(self.source_names) != game.m or len(self.target_names) != game.n_targets:
            raise InvalidInputError("name lists must match the game's player and target counts")
        self.delay = delay
        if score_range is None:
            score_range = (0.0, 1.0)
        self.score_range = score_range

    def evaluate(self, key: SubsetKey, spec: SampleSpec | None = None) -> np.ndarray:
        if self.delay:
            time.sleep(self.delay)
        return synthetic_score(self.game, key)

    def empty_score(self) -> np.ndarray:
        return self.game.empty

    def describe(self) -> dict:
        return {"type": "tabular", "game": self.game.name, "m": self.game.m, "delay": self.delay}
