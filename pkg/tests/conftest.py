import itertools
import math

import numpy as np
import pytest

from shapsrc.game import SubsetKey
from shapsrc.oracle import TabularGame, TabularOracle


def permutation_shapley(game, m):
    """Brute-force Shapley: average marginal over all m! orderings."""
    phi = np.zeros((game.n_targets, m))
    for perm in itertools.permutations(range(m)):
        members = []
        prev = game(SubsetKey(()))
        for j in perm:
            members.append(j)
            cur = game(SubsetKey(tuple(sorted(members))))
            phi[:, j] += cur - prev
            prev = cur
    return phi / math.factorial(m)


@pytest.fixture
def glove():
    return TabularGame.glove()


@pytest.fixture
def glove_oracle(glove):
    return TabularOracle(glove)


@pytest.fixture
def additive():
    return TabularGame.additive([0.2, 0.5, 0.3])


# -- acceptance reporting ---------------------------------------------------
# Tests marked ``acceptance(n, title)`` get one summary line each at the end
# of the session, with any ``note`` properties they recorded.

_criteria: dict[int, tuple[str, str, list]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not mark.args:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        n, title = mark.args
        notes = [v for k, v in item.user_properties if k == "note"]
        _criteria[n] = (title, "PASS" if report.passed else "FAIL", notes)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, status, notes = _criteria[n]
        detail = f" ({'; '.join(notes)})" if notes else ""
        terminalreporter.write_line(f"criterion {n:2d} {status}: {title}{detail}")
