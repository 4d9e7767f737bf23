"""Score oracle backed by child processes speaking line-delimited JSON.

Handshake (once per process)::

    -> {"hello": 1, "sources": [...], "targets": [...]}
    <- {"ok": true, "score_range": [lo, hi]}

Then one request per cache miss::

    -> {"id": 7, "train": [{"source": "en", "indices": [0, 4, ...]}], "targets": ["de", "fr"]}
    <- {"id": 7, "scores": [0.71, 0.66]}

An empty ``train`` list asks for the score of an untrained model.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import queue
import subprocess
import threading
from collections import deque
from typing import Sequence

import numpy as np

from ..game import InvalidInputError, OracleFailure, SubsetKey
from ..sampler import SampleSpec, TrainBundle, stratified_sample
from .base import Oracle

__all__ = ["ExternalOracle", "Endpoint", "external_score"]

log = logging.getLogger(__name__)

_EOF = object()


class Endpoint:
    """One scorer process. Calls are serialized by an internal lock."""

    def __init__(self, command: Sequence[str], timeout: float = 600.0):
        self.command = list(command)
        self.timeout = timeout
        self._lock = threading.Lock()
        self._ids = itertools.count(1)
        self._stderr_tail: deque[str] = deque(maxlen=20)
        try:
            self.proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, text=True, bufsize=1,
            )
        except OSError as exc:
            raise OracleFailure(f"cannot launch scorer {self.command}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        threading.Thread(target=self._pump_stdout, daemon=True).start()
        threading.Thread(target=self._pump_stderr, daemon=True).start()

    def _pump_stdout(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _pump_stderr(self):
        for line in self.proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _exchange(self, message: dict):
        try:
            self.proc.stdin.write(json.dumps(message) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise OracleFailure(f"scorer pipe closed: {exc}", list(self._stderr_tail)) from None
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise OracleFailure(f"scorer timed out after {self.timeout}s", list(self._stderr_tail)) from None
        if line is _EOF:
            self.proc.wait()
            raise OracleFailure(f"scorer exited with code {self.proc.returncode}",
                                list(self._stderr_tail))
        try:
            return json.loads(line)
        except json.JSONDecodeError:
            raise OracleFailure("scorer sent malformed JSON", line) from None

    def handshake(self, sources: Sequence[str], targets: Sequence[str]) -> tuple[float, float]:
        with self._lock:
            reply = self._exchange({"hello": 1, "sources": list(sources), "targets": list(targets)})
        if not isinstance(reply, dict) or reply.get("ok") is not True:
            raise OracleFailure("scorer rejected handshake", reply)
        rng = reply.get("score_range", [0.0, 1.0])
        if (not isinstance(rng, list) or len(rng) != 2
                or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in rng)
                or rng[0] >= rng[1]):
            raise OracleFailure("scorer sent an invalid score_range", reply)
        return float(rng[0]), float(rng[1])

    def request(self, train: list[dict], targets: Sequence[str],
                score_range: tuple[float, float] | None = None) -> np.ndarray:
        with self._lock:
            rid = next(self._ids)
            reply = self._exchange({"id": rid, "train": train, "targets": list(targets)})
        if not isinstance(reply, dict) or reply.get("id") != rid:
            raise OracleFailure(f"response id does not match request {rid}", reply)
        scores = reply.get("scores")
        if not isinstance(scores, list) or len(scores) != len(targets):
            raise OracleFailure(f"expected {len(targets)} scores", reply)
        if not all(isinstance(s, (int, float)) and not isinstance(s, bool) and math.isfinite(s)
                   for s in scores):
            raise OracleFailure("scores must be finite numbers", reply)
        if score_range is not None and not all(score_range[0] <= s <= score_range[1] for s in scores):
            raise OracleFailure(f"score outside declared range {list(score_range)}", reply)
        arr = np.array(scores, dtype=float)
        arr.setflags(write=False)
        return arr

    def close(self):
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


class ExternalOracle(Oracle):
    """Pool of scorer processes; each call borrows one idle process.

    ``sizes`` gives the instance count per source so stratified draws can be
    made on this side of the pipe.
    """

    def __init__(self, command: Sequence[str], source_names: Sequence[str], sizes: Sequence[int],
                 target_names: Sequence[str], processes: int = 1, timeout: float = 600.0):
        if len(source_names) != len(sizes):
            raise InvalidInputError("need one size per source")
        self.command = list(command)
        self.source_names = list(source_names)
        self.target_names = list(target_names)
        self.sizes = list(sizes)
        self._idle: queue.Queue[Endpoint] = queue.Queue()
        self._all: list[Endpoint] = []
        try:
            for _ in range(max(1, processes)):
                ep = Endpoint(self.command, timeout)
                self._all.append(ep)
                rng = ep.handshake(self.source_names, self.target_names)
                self._idle.put(ep)
        except Exception:
            self.close()
            raise
        self.score_range = rng

    def describe(self) -> dict:
        return {"type": "external", "command": self.command}

    def _call(self, train: list[dict]) -> np.ndarray:
        ep = self._idle.get()
        try:
            return ep.request(train, self.target_names, self.score_range)
        finally:
            self._idle.put(ep)

    def train_and_score(self, bundle: TrainBundle) -> np.ndarray:
        return self._call(bundle.to_wire(self.source_names))

    def evaluate(self, key: SubsetKey, spec: SampleSpec) -> np.ndarray:
        return self.train_and_score(stratified_sample(key, self.sizes, spec))

    def empty_score(self) -> np.ndarray:
        return self._call([])

    def close(self) -> None:
        for ep in self._all:
            ep.close()
        self._all = []


def external_score(endpoint: Endpoint, bundle: TrainBundle, source_names: Sequence[str],
                   targets: Sequence[str]) -> np.ndarray:
    """Send one training request on an already hand-shaken endpoint."""
    return endpoint.request(bundle.to_wire(source_names), targets)
