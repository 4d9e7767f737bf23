"""Write-once subset score cache with an optional append-only file."""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import Future
from pathlib import Path
from typing import Callable

import numpy as np

from ..game import InvalidInputError, SubsetKey, as_score_vector

log = logging.getLogger(__name__)

CACHE_FORMAT = "shapsrc-cache"
CACHE_VERSION = 1


class SubsetScoreCache:
    """Maps :class:`SubsetKey` to a score vector, computing each key at most once.

    Concurrent requests for a key already being computed wait for that
    computation instead of starting another one (and count as hits). With
    ``enabled=False`` every lookup recomputes and counts as a miss.

    When ``path`` is set, each new entry is appended to it as one JSON line
    after a header line; ``resume=True`` loads an existing file first.
    """

    def __init__(self, n_sources: int, n_targets: int, enabled: bool = True,
                 path: str | Path | None = None, resume: bool = False, fingerprint: str = ""):
        self.n_sources = n_sources
        self.n_targets = n_targets
        self.enabled = enabled
        self.fingerprint = fingerprint
        self.hits = 0
        self.misses = 0
        self._entries: dict[SubsetKey, np.ndarray] = {}
        self._seeds: dict[SubsetKey, int] = {}
        self._inflight: dict[SubsetKey, Future] = {}
        self._lock = threading.Lock()
        self._fh = None
        self.path = Path(path) if path is not None else None
        if self.path is not None:
            if resume and self.path.exists():
                self._load()
                self._fh = self.path.open("a", encoding="utf-8")
            else:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                self._fh = self.path.open("w", encoding="utf-8")
                self._fh.write(json.dumps(self._header()) + "\n")
                self._fh.flush()

    def _header(self) -> dict:
        return {"format": CACHE_FORMAT, "version": CACHE_VERSION, "n_sources": self.n_sources,
                "n_targets": self.n_targets, "fingerprint": self.fingerprint}

    def _load(self):
        with self.path.open(encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise InvalidInputError(f"{self.path}: empty cache file")
        try:
            head = json.loads(lines[0])
        except json.JSONDecodeError:
            raise InvalidInputError(f"{self.path}:1: cache header is not JSON") from None
        if head.get("format") != CACHE_FORMAT or head.get("version") != CACHE_VERSION:
            raise InvalidInputError(f"{self.path}:1: not a version-{CACHE_VERSION} score cache")
        if (head.get("n_sources"), head.get("n_targets")) != (self.n_sources, self.n_targets):
            raise InvalidInputError(
                f"{self.path}: cache holds {head.get('n_sources')} sources x {head.get('n_targets')} "
                f"targets, problem has {self.n_sources} x {self.n_targets}")
        if head.get("fingerprint") != self.fingerprint:
            raise InvalidInputError(f"{self.path}: cache was written for a different problem or config")
        for lineno, line in enumerate(lines[1:], 2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = SubsetKey.from_bytes(bytes.fromhex(rec["key"]))
                scores = as_score_vector(rec["scores"], self.n_targets)
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise InvalidInputError(f"{self.path}:{lineno}: bad cache record ({exc})") from None
            if key.members and key.members[-1] >= self.n_sources:
                raise InvalidInputError(f"{self.path}:{lineno}: key outside {self.n_sources} sources")
            self._entries.setdefault(key, scores)
            self._seeds.setdefault(key, int(rec.get("seed", 0)))
        log.info("loaded %d cached subset scores from %s", len(self._entries), self.path)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: SubsetKey) -> bool:
        return key in self._entries

    def peek(self, key: SubsetKey) -> np.ndarray | None:
        return self._entries.get(key)

    def get(self, key: SubsetKey, compute: Callable[[], np.ndarray], seed: int = 0) -> np.ndarray:
        if not self.enabled:
            with self._lock:
                self.misses += 1
            return as_score_vector(compute(), self.n_targets)
        with self._lock:
            hit = self._entries.get(key)
            if hit is not None:
                self.hits += 1
                return hit
            pending = self._inflight.get(key)
            if pending is not None:
                self.hits += 1
            else:
                fut = self._inflight[key] = Future()
                self.misses += 1
        if pending is not None:
            return pending.result()
        try:
            scores = as_score_vector(compute(), self.n_targets)
        except BaseException as exc:
            with self._lock:
                del self._inflight[key]
            fut.set_exception(exc)
            raise
        with self._lock:
            self._entries[key] = scores
            self._seeds[key] = seed
            del self._inflight[key]
            if self._fh is not None:
                self._fh.write(json.dumps({"key": key.to_bytes().hex(), "scores": scores.tolist(),
                                           "seed": seed}) + "\n")
                self._fh.flush()
        fut.set_result(scores)
        return scores

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None
