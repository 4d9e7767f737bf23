"""One-pass classifiers used as in-process score oracles.

``naive-count`` is a multinomial token-count model with add-one smoothing
over whitespace tokens; ``nearest-centroid`` assigns each vector to the
closest class mean. Both score per-target accuracy.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import sparse

from .. import kernels
from ..game import InvalidInputError, SubsetKey, as_score_vector
from ..sampler import SampleSpec, TrainBundle, stratified_sample
from .base import Oracle
from .corpus import SourceCorpus, TargetCorpus, corpus_kind

__all__ = ["BuiltinOracle", "builtin_train_and_score", "KINDS"]

KINDS = ("naive-count", "nearest-centroid")


class _TextBlock:
    def __init__(self, docs: list[tuple], vocab: dict[str, int]):
        rows, cols = [], []
        for d, toks in enumerate(docs):
            for tok in toks:
                rows.append(d)
                cols.append(vocab.setdefault(tok, len(vocab)))
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.n = len(docs)

    def matrix(self, n_vocab: int) -> sparse.csr_matrix:
        data = np.ones(len(self.rows))
        x = sparse.csr_matrix((data, (self.rows, self.cols)), shape=(self.n, n_vocab))
        x.sum_duplicates()
        x.sort_indices()
        return x


class BuiltinOracle(Oracle):
    """Score oracle training a lightweight classifier on each sampled bundle.

    Labels are mapped to ids in sorted string order; prediction ties go to
    the smallest id.
    """

    def __init__(self, sources: Sequence[SourceCorpus], targets: Sequence[TargetCorpus],
                 kind: str = "naive-count"):
        if kind not in KINDS:
            raise InvalidInputError(f"unknown classifier kind {kind!r}; expected one of {KINDS}")
        if not sources or not targets:
            raise InvalidInputError("need at least one source and one target corpus")
        for j, src in enumerate(sources):
            if src.id.index != j:
                raise InvalidInputError("source ids must be dense and in order")
        form = corpus_kind(list(sources) + list(targets))
        if (kind == "naive-count") != (form == "text"):
            raise InvalidInputError(f"classifier {kind!r} cannot train on {form} instances")
        self.kind = kind
        self.sources = list(sources)
        self.targets = list(targets)
        self.source_names = [s.name for s in sources]
        self.target_names = [t.name for t in targets]
        self.sizes = [len(s) for s in sources]
        self.labels = sorted({i.label for c in self.sources + self.targets for i in c.instances})
        lid = {lab: k for k, lab in enumerate(self.labels)}
        self._src_y = [np.array([lid[i.label] for i in s.instances]) for s in sources]
        self._tgt_y = [np.array([lid[i.label] for i in t.instances]) for t in targets]
        if form == "text":
            vocab: dict[str, int] = {}
            src_blocks = [_TextBlock([i.features for i in s.instances], vocab) for s in sources]
            tgt_blocks = [_TextBlock([i.features for i in t.instances], vocab) for t in targets]
            self.n_vocab = len(vocab)
            self._src_x = [b.matrix(self.n_vocab) for b in src_blocks]
            self._tgt_x = []
            for b in tgt_blocks:
                x = b.matrix(self.n_vocab)
                self._tgt_x.append((x.indptr.astype(np.int64), x.indices.astype(np.int64),
                                    x.data.astype(np.float64)))
        else:
            self._src_x = [np.array([i.features for i in s.instances], dtype=float) for s in sources]
            self._tgt_x = [np.ascontiguousarray([i.features for i in t.instances], dtype=float)
                           for t in targets]

    def describe(self) -> dict:
        return {"type": "builtin", "kind": self.kind, "labels": self.labels}

    def _gather(self, bundle: TrainBundle):
        xs, ys = [], []
        for s, idx in bundle.per_source:
            if s >= len(self.sources):
                raise InvalidInputError(f"bundle names unknown source index {s}")
            ix = np.asarray(idx, dtype=np.int64)
            if len(np.unique(ix)) != len(ix) or (len(ix) and (ix.min() < 0 or ix.max() >= self.sizes[s])):
                raise InvalidInputError(f"invalid or duplicate instance indices for source {s}")
            xs.append(self._src_x[s][ix])
            ys.append(self._src_y[s][ix])
        y = np.concatenate(ys) if ys else np.zeros(0, dtype=np.int64)
        return xs, y

    def _predict_all(self, xs, y) -> list[np.ndarray]:
        n_cls = len(self.labels)
        class_n = np.bincount(y, minlength=n_cls).astype(float)
        present = class_n > 0
        if self.kind == "naive-count":
            x = sparse.vstack(xs).tocsr()
            onehot = sparse.csr_matrix((np.ones(len(y)), (y, np.arange(len(y)))), shape=(n_cls, len(y)))
            counts = np.asarray((onehot @ x).todense())  # (C, V)
            seen = counts.sum(axis=0) > 0
            n_seen = int(seen.sum())
            log_prob = np.zeros((self.n_vocab, n_cls))
            denom = counts.sum(axis=1) + n_seen
            log_prob[seen] = (np.log(counts[:, seen] + 1.0) - np.log(denom)[:, None]).T
            with np.errstate(divide="ignore"):
                log_prior = np.log(class_n / class_n.sum())
            log_prob = np.ascontiguousarray(log_prob)
            return [kernels.nb_predict(indptr, tok, cnt, log_prob, log_prior)
                    for indptr, tok, cnt in self._tgt_x]
        x = np.concatenate(xs)
        cls = np.flatnonzero(present)
        centroids = np.ascontiguousarray([x[y == c].mean(axis=0) for c in cls])
        return [cls[kernels.centroid_predict(tx, centroids)] for tx in self._tgt_x]

    def train_and_score(self, bundle: TrainBundle) -> np.ndarray:
        xs, y = self._gather(bundle)
        if len(y) == 0:
            raise InvalidInputError("cannot train on an empty bundle")
        preds = self._predict_all(xs, y)
        return as_score_vector([float(np.mean(p == ty)) for p, ty in zip(preds, self._tgt_y)],
                               self.n_targets)

    def evaluate(self, key: SubsetKey, spec: SampleSpec) -> np.ndarray:
        return self.train_and_score(stratified_sample(key, self.sizes, spec))

    def empty_score(self) -> np.ndarray:
        # no evidence: every class ties, so the smallest label id is predicted
        return as_score_vector([float(np.mean(ty == 0)) for ty in self._tgt_y])

    def random_score(self) -> np.ndarray:
        # expected accuracy of uniform guessing over the label set
        return as_score_vector([1.0 / len(self.labels)] * self.n_targets)


def builtin_train_and_score(bundle: TrainBundle, sources: Sequence[SourceCorpus],
                            targets: Sequence[TargetCorpus], kind: str = "naive-count") -> np.ndarray:
    """Train ``kind`` on the bundle's instances and return accuracy per target."""
    if len(bundle) == 0:
        raise InvalidInputError("cannot train on an empty bundle")
    return BuiltinOracle(sources, targets, kind).train_and_score(bundle)
