"""Predicting source values for a target without labeled data.

Each known corpus is treated in turn as the target, with the remaining
corpora as sources. The resulting Shapley values become regression targets
for a ridge model over user-supplied (target, source) features.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .game import InvalidInputError
from .oracle.base import Oracle
from .shapley.engine import EngineConfig, seal_shap

__all__ = [
    "FeatureTable", "RankerModel", "RankerRow", "build_ranker_dataset", "train_ranker",
    "predict_source_values", "leave_one_out_loss",
]


class SingularSystemError(ArithmeticError):
    pass


@dataclass
class FeatureTable:
    rows: dict[tuple[str, str], np.ndarray]
    names: list[str]

    def __post_init__(self):
        dims = {len(v) for v in self.rows.values()}
        if len(dims) > 1:
            raise InvalidInputError(f"feature vectors have inconsistent lengths {sorted(dims)}")
        for target, source in self.rows:
            if target == source:
                raise InvalidInputError(f"feature row pairs {target!r} with itself")

    @property
    def dim(self) -> int:
        return len(self.names)

    def get(self, target: str, source: str) -> np.ndarray:
        try:
            return self.rows[(target, source)]
        except KeyError:
            raise InvalidInputError(f"no feature row for target={target!r}, source={source!r}") from None

    def matrix(self, target: str, sources: Sequence[str]) -> np.ndarray:
        return np.array([self.get(target, s) for s in sources], dtype=float).reshape(len(sources), self.dim)

    @classmethod
    def from_mapping(cls, rows: Mapping[tuple[str, str], Sequence[float]],
                     names: Sequence[str] | None = None) -> "FeatureTable":
        conv = {k: np.asarray(v, dtype=float) for k, v in rows.items()}
        dim = len(next(iter(conv.values()))) if conv else 0
        return cls(conv, list(names) if names is not None else [f"f{i + 1}" for i in range(dim)])

    @classmethod
    def read_csv(cls, path: str | Path) -> "FeatureTable":
        """Load ``target,source,f1..fK`` rows."""
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"feature file not found: {path}")
        rows: dict[tuple[str, str], np.ndarray] = {}
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or [h.strip() for h in header[:2]] != ["target", "source"] or len(header) < 3:
                raise InvalidInputError(f"{path}:1: header must be target,source,f1..fK")
            for lineno, rec in enumerate(reader, 2):
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise InvalidInputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
                try:
                    vec = np.array([float(x) for x in rec[2:]])
                except ValueError:
                    raise InvalidInputError(f"{path}:{lineno}: non-numeric feature") from None
                pair = (rec[0].strip(), rec[1].strip())
                if pair in rows:
                    raise InvalidInputError(f"{path}:{lineno}: duplicate row for {pair}")
                rows[pair] = vec
        return cls(rows, [h.strip() for h in header[2:]])


@dataclass
class RankerRow:
    target: str
    source: str
    features: np.ndarray
    value: float


def build_ranker_dataset(names: Sequence[str], features: FeatureTable, config: EngineConfig,
                         oracle_factory: Callable[[str, list[str]], Oracle],
                         workers: int = 1) -> list[RankerRow]:
    """Leave-one-corpus-out training rows for the ranker.

    For each corpus ``j`` in ``names``, ``oracle_factory(j, others)`` must
    return an oracle scoring subsets of ``others`` on ``j`` alone. Emits one
    row per ordered pair, ``m * (m - 1)`` rows in total.
    """
    m = len(names)
    if m < 3:
        raise InvalidInputError("the ranker dataset needs at least three corpora")
    for j in names:
        for x in names:
            if x != j:
                features.get(j, x)
    rows = []
    for j in names:
        others = [x for x in names if x != j]
        with oracle_factory(j, others) as oracle:
            if oracle.n_targets != 1:
                raise InvalidInputError("oracle_factory must return single-target oracles")
            result = seal_shap(oracle, config, workers=workers)
        for x, value in zip(others, result.values[0]):
            rows.append(RankerRow(j, x, features.get(j, x), float(value)))
    return rows


@dataclass
class RankerModel:
    """Linear value predictor. ``weights``/``intercept`` act on raw features;
    ``mean``/``scale`` are the standardization used during fitting."""

    weights: np.ndarray
    intercept: float
    lam: float
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.intercept):
            raise InvalidInputError("ranker weights must be finite")

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "intercept": self.intercept, "lambda": self.lam,
                "mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "RankerModel":
        return cls(np.asarray(obj["weights"], dtype=float), float(obj["intercept"]), float(obj["lambda"]),
                   np.asarray(obj["mean"], dtype=float), np.asarray(obj["scale"], dtype=float))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "RankerModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def _as_xy(dataset) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dataset, tuple):
        x, y = dataset
    else:
        x = [r.features for r in dataset]
        y = [r.value for r in dataset]
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x, np.asarray(y, dtype=float)


def train_ranker(dataset, lam: float = 1.0) -> RankerModel:
    """Closed-form ridge regression on standardized features.

    ``dataset`` is a list of :class:`RankerRow` or an ``(X, y)`` pair. The
    intercept is not penalized.
    """
    if lam < 0:
        raise InvalidInputError("lambda must be non-negative")
    x, y = _as_xy(dataset)
    if len(y) == 0:
        raise InvalidInputError("empty ranker dataset")
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    z = (x - mean) / scale
    y_mean = float(y.mean())
    gram = z.T @ z + lam * np.eye(x.shape[1])
    if lam == 0 and np.linalg.matrix_rank(gram) < x.shape[1]:
        raise SingularSystemError("normal equations are singular; use lambda > 0")
    w = np.linalg.solve(gram, z.T @ (y - y_mean))
    weights = w / scale
    return RankerModel(weights, y_mean - float(mean @ weights), float(lam), mean, scale)


def predict_source_values(model: RankerModel, features) -> np.ndarray:
    """Predicted value per row of ``features`` (one row per source)."""
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != len(model.weights):
        raise InvalidInputError(f"feature dimension {x.shape[1]} does not match model ({len(model.weights)})")
    return x @ model.weights + model.intercept


def leave_one_out_loss(dataset, lam: float) -> float:
    """Mean squared error of refits that each hold out one row."""
    x, y = _as_xy(dataset)
    errs = []
    for i in range(len(y)):
        keep = np.arange(len(y)) != i
        model = train_ranker((x[keep], y[keep]), lam)
        errs.append(float(predict_source_values(model, x[i])[0] - y[i]) ** 2)
    return float(np.mean(errs))
