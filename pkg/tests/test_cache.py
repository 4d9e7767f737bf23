import threading
import time

import numpy as np
import pytest

from shapsrc.game import InvalidInputError, SubsetKey
from shapsrc.shapley import SubsetScoreCache


def test_hit_and_miss_counts():
    c = SubsetScoreCache(3, 1)
    k = SubsetKey((0, 2))
    assert c.get(k, lambda: [0.4]).tolist() == [0.4]
    assert c.get(k, lambda: [9.9]).tolist() == [0.4]
    assert (c.hits, c.misses) == (1, 1)


def test_entries_are_read_only():
    c = SubsetScoreCache(2, 1)
    v = c.get(SubsetKey((0,)), lambda: [0.1])
    with pytest.raises(ValueError):
        v[0] = 1.0


def test_arity_checked():
    c = SubsetScoreCache(2, 2)
    with pytest.raises(InvalidInputError):
        c.get(SubsetKey((0,)), lambda: [0.1])


def test_disabled_recomputes():
    c = SubsetScoreCache(2, 1, enabled=False)
    calls = []
    for _ in range(3):
        c.get(SubsetKey((1,)), lambda: calls.append(1) or [0.5])
    assert len(calls) == 3 and c.misses == 3 and c.hits == 0 and len(c) == 0


def test_concurrent_requests_compute_once():
    c = SubsetScoreCache(2, 1)
    calls = []

    def slow():
        calls.append(1)
        time.sleep(0.05)
        return [0.3]

    threads = [threading.Thread(target=c.get, args=(SubsetKey((0, 1)), slow)) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(calls) == 1 and c.misses == 1 and c.hits == 7


def test_failed_compute_is_not_cached():
    c = SubsetScoreCache(2, 1)

    def boom():
        raise RuntimeError("x")

    with pytest.raises(RuntimeError):
        c.get(SubsetKey((0,)), boom)
    assert c.get(SubsetKey((0,)), lambda: [0.2]).tolist() == [0.2]


def test_persist_and_resume(tmp_path):
    p = tmp_path / "c.jsonl"
    c = SubsetScoreCache(3, 2, path=p, fingerprint="abc")
    c.get(SubsetKey((0, 1)), lambda: [0.1, 0.2], seed=7)
    c.get(SubsetKey((2,)), lambda: [1 / 3, 0.0])
    c.close()
    r = SubsetScoreCache(3, 2, path=p, resume=True, fingerprint="abc")
    assert len(r) == 2
    # exact float round trip
    assert r.peek(SubsetKey((2,))).tolist() == [1 / 3, 0.0]
    r.get(SubsetKey((0, 1)), lambda: pytest.fail("should be cached"))
    r.get(SubsetKey((0,)), lambda: [0.5, 0.5])
    r.close()
    assert len(SubsetScoreCache(3, 2, path=p, resume=True, fingerprint="abc")) == 3


def test_without_resume_file_is_truncated(tmp_path):
    p = tmp_path / "c.jsonl"
    c = SubsetScoreCache(2, 1, path=p)
    c.get(SubsetKey((0,)), lambda: [0.1])
    c.close()
    assert len(SubsetScoreCache(2, 1, path=p, resume=False)) == 0


@pytest.mark.parametrize("n_sources,n_targets,fp", [(4, 2, "abc"), (3, 1, "abc"), (3, 2, "xyz")])
def test_resume_rejects_mismatch(tmp_path, n_sources, n_targets, fp):
    p = tmp_path / "c.jsonl"
    SubsetScoreCache(3, 2, path=p, fingerprint="abc").close()
    with pytest.raises(InvalidInputError):
        SubsetScoreCache(n_sources, n_targets, path=p, resume=True, fingerprint=fp)


def test_resume_rejects_corrupt_record(tmp_path):
    p = tmp_path / "c.jsonl"
    c = SubsetScoreCache(2, 1, path=p)
    c.close()
    with p.open("a") as fh:
        fh.write('{"key": "zz", "scores": [0.1]}\n')
    with pytest.raises(InvalidInputError, match=":2:"):
        SubsetScoreCache(2, 1, path=p, resume=True)
