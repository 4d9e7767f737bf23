import threading

import numpy as np
import pytest

from shapsrc import EngineConfig, Rho, SampleSpec, exact_shapley, seal_shap
from shapsrc.game import InvalidInputError, OracleFailure, SubsetKey
from shapsrc.oracle import TabularGame, TabularOracle
from shapsrc.shapley import SubsetScoreCache, resolve_rho


class CountingOracle(TabularOracle):
    def __init__(self, game, **kw):
        super().__init__(game, **kw)
        self.calls = 0
        self._lock = threading.Lock()

    def evaluate(self, key, spec=None):
        with self._lock:
            self.calls += 1
        return super().evaluate(key, spec)


def test_single_source_gets_everything():
    g = TabularGame.additive([0.8], empty=0.1)
    res = seal_shap(TabularOracle(g), EngineConfig(nepoch=5))
    assert res.values[0, 0] == pytest.approx(0.8)


def test_glove_estimate(glove_oracle):
    res = seal_shap(glove_oracle, EngineConfig(nepoch=2000, epsilon=0))
    assert np.abs(res.values[0] - [2 / 3, 1 / 6, 1 / 6]).max() < 0.02
    assert res.epochs_run == 2000 and not res.converged


def test_efficiency_every_epoch():
    rng = np.random.default_rng(3)
    g = TabularGame.random(5, rng)
    res = seal_shap(TabularOracle(g), EngineConfig(nepoch=30, epsilon=0))
    gap = g(SubsetKey(tuple(range(5))))[0] - g.empty[0]
    assert np.allclose(res.history[:, 0, :].sum(axis=1), gap)


def test_same_seed_same_result():
    g = TabularGame.random(6, np.random.default_rng(1))
    cfg = EngineConfig(nepoch=50, seed=9)
    a, b = seal_shap(TabularOracle(g), cfg), seal_shap(TabularOracle(g), cfg)
    assert (a.values == b.values).all() and a.oracle_trainings == b.oracle_trainings
    c = seal_shap(TabularOracle(g), cfg.with_seed(10))
    assert not (a.values == c.values).all()


def test_cache_off_is_identical_but_costs_more():
    g = TabularGame.random(5, np.random.default_rng(2))
    on = seal_shap(CountingOracle(g), EngineConfig(nepoch=80, epsilon=0))
    off_oracle = CountingOracle(g)
    off = seal_shap(off_oracle, EngineConfig(nepoch=80, epsilon=0, use_cache=False))
    assert (on.values == off.values).all()
    assert on.oracle_trainings <= 2**5 - 1
    assert off.oracle_trainings == off_oracle.calls
    assert off.cache_hits == 0 and off.oracle_trainings > on.oracle_trainings


def test_every_lookup_is_hit_or_miss():
    g = TabularGame.random(4, np.random.default_rng(4))
    res = seal_shap(TabularOracle(g), EngineConfig(nepoch=40, epsilon=0))
    # one full-set score plus m lookups per epoch
    assert res.cache_hits + res.cache_misses == 1 + 40 * 4


def test_zero_tolerance_never_truncates():
    g = TabularGame.concave(np.linspace(0.1, 1, 6))
    res = seal_shap(TabularOracle(g), EngineConfig(nepoch=50, epsilon=0))
    assert res.truncations == 0


def test_truncation_saves_trainings():
    g = TabularGame.concave(np.linspace(0.1, 1, 8), rate=5.0)
    exact = seal_shap(TabularOracle(g), EngineConfig(nepoch=60, epsilon=0))
    trunc = seal_shap(TabularOracle(g), EngineConfig(nepoch=60, epsilon=0, tolerance=0.05))
    assert trunc.truncations > 0
    assert trunc.oracle_trainings < exact.oracle_trainings


def test_tolerance_is_strict():
    # additive game: after the first step the running score differs from the
    # full score by exactly 0.5 (source 1 left) or 0.5 (source 0 left)
    g = TabularGame.additive([0.5, 0.5])
    res = seal_shap(TabularOracle(g), EngineConfig(nepoch=4, epsilon=0, tolerance=0.5))
    assert res.truncations == 0


def test_multi_target_amortizes():
    w = np.random.default_rng(5).uniform(size=(3, 5))
    joint = seal_shap(TabularOracle(TabularGame.additive(w)), EngineConfig(nepoch=40, epsilon=0))
    for t in range(3):
        single = seal_shap(TabularOracle(TabularGame.additive(w[t])), EngineConfig(nepoch=40, epsilon=0))
        assert joint.values[t] == pytest.approx(single.values[0])
        assert joint.oracle_trainings == single.oracle_trainings


def test_workers_do_not_change_results():
    g = TabularGame.random(7, np.random.default_rng(6), n_targets=2)
    cfg = EngineConfig(nepoch=100, epsilon=0, tolerance=0.05)
    one = seal_shap(TabularOracle(g), cfg, workers=1)
    many = seal_shap(TabularOracle(g, delay=0.0005), cfg, workers=8)
    assert (one.values == many.values).all()
    assert one.oracle_trainings == many.oracle_trainings
    assert one.truncations == many.truncations


def test_convergence_stops_early():
    g = TabularGame.additive([0.3, 0.2, 0.1])
    res = seal_shap(TabularOracle(g), EngineConfig(nepoch=500, window=5))
    assert res.converged and res.epochs_run == 6


def test_history_shape_and_wall_time(glove_oracle):
    res = seal_shap(glove_oracle, EngineConfig(nepoch=12, epsilon=0))
    assert res.history.shape == (12, 1, 3)
    assert len(res.max_change) == 12 and res.wall_time >= 0


@pytest.mark.parametrize("policy,expected", [
    ("EmptyScore", 0.0), ("All", 1.0), ("AllHalf", 0.5),
    ("FracSingle", 0.0), ("Mu", 0.25), ("Random", 0.0),
])
def test_rho_policies(glove_oracle, policy, expected):
    assert resolve_rho(Rho(policy), glove_oracle)[0] == pytest.approx(expected)


def test_rho_const_range(glove_oracle):
    assert resolve_rho(Rho.const(0.2), glove_oracle).tolist() == [0.2]
    with pytest.raises(InvalidInputError):
        resolve_rho(Rho.const(2.0), glove_oracle)
    with pytest.raises(InvalidInputError):
        Rho("Const")
    with pytest.raises(InvalidInputError):
        Rho("Bogus")


def test_rho_shifts_first_marginal(glove_oracle):
    res = seal_shap(glove_oracle, EngineConfig(nepoch=20, epsilon=0, rho=Rho.const(0.4)))
    assert res.values.sum() == pytest.approx(0.6)


def test_sampled_estimate_matches_sample_spec():
    g = TabularGame.random(4, np.random.default_rng(8))
    res = seal_shap(TabularOracle(g), EngineConfig(nepoch=30, sample_spec=SampleSpec(0.5, 3), seed=3))
    assert res.values.shape == (1, 4)


@pytest.mark.parametrize("bad", [dict(nepoch=0), dict(tolerance=-1), dict(window=0),
                                 dict(epsilon=-1), dict(seed=-1), dict(epoch_block=0)])
def test_config_validation(bad):
    with pytest.raises(InvalidInputError):
        EngineConfig(**bad)


class FailingOracle(TabularOracle):
    def __init__(self, game, fail_after):
        super().__init__(game)
        self.left = fail_after

    def evaluate(self, key, spec=None):
        self.left -= 1
        if self.left < 0:
            raise OracleFailure("scorer exited", payload=None)
        return super().evaluate(key, spec)


def test_oracle_failure_reports_partial_state():
    g = TabularGame.random(6, np.random.default_rng(9))
    with pytest.raises(OracleFailure) as err:
        seal_shap(FailingOracle(g, 20), EngineConfig(nepoch=100, epsilon=0, epoch_block=1))
    part = err.value.partial
    assert part["cache_misses"] == 21
    assert part["epochs_run"] >= 1
    assert np.asarray(part["values"]).shape == (1, 6)


def test_shared_cache_between_runs():
    g = TabularGame.random(4, np.random.default_rng(10))
    cache = SubsetScoreCache(4, 1)
    first = seal_shap(TabularOracle(g), EngineConfig(nepoch=50, epsilon=0), cache=cache)
    misses = cache.misses
    second = seal_shap(TabularOracle(g), EngineConfig(nepoch=50, epsilon=0), cache=cache)
    assert cache.misses == misses and (first.values == second.values).all()


def test_matches_exact_on_random_game():
    g = TabularGame.random(5, np.random.default_rng(11))
    est = seal_shap(TabularOracle(g), EngineConfig(nepoch=3000, epsilon=0)).values
    assert np.abs(est - exact_shapley(g, 5)).max() < 0.05
