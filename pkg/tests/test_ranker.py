import numpy as np
import pytest

from shapsrc import EngineConfig
from shapsrc.game import InvalidInputError
from shapsrc.oracle import TabularGame, TabularOracle
from shapsrc.ranker import (FeatureTable, RankerModel, SingularSystemError, build_ranker_dataset,
                            leave_one_out_loss, predict_source_values, train_ranker)

NAMES = ["a", "b", "c", "d"]


def _features(dim=2, seed=0):
    rng = np.random.default_rng(seed)
    return FeatureTable.from_mapping({(t, s): rng.uniform(size=dim) for t in NAMES for s in NAMES if s != t})


def _factory(features, coef):
    def make(target, others):
        w = features.matrix(target, others) @ coef
        return TabularOracle(TabularGame.additive(w), others, [target])
    return make


def test_dataset_has_all_ordered_pairs():
    feats = _features()
    rows = build_ranker_dataset(NAMES, feats, EngineConfig(nepoch=5), _factory(feats, np.array([1.0, 2.0])))
    assert len(rows) == 12
    assert {(r.target, r.source) for r in rows} == {(t, s) for t in NAMES for s in NAMES if s != t}
    # additive games: every estimate is the exact weight
    for r in rows:
        assert r.value == pytest.approx(r.features @ [1.0, 2.0])


def test_missing_feature_row_named_up_front():
    feats = _features()
    del feats.rows[("c", "a")]
    with pytest.raises(InvalidInputError, match="target='c', source='a'"):
        build_ranker_dataset(NAMES, feats, EngineConfig(nepoch=5), _factory(feats, np.ones(2)))


def test_recovers_linear_map():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(40, 3)) * [1, 10, 0.1] + [0, 5, 0]
    y = x @ [0.5, -0.2, 3.0] + 1.5
    model = train_ranker((x, y), lam=0.0)
    assert model.weights == pytest.approx([0.5, -0.2, 3.0])
    assert model.intercept == pytest.approx(1.5)
    assert predict_source_values(model, x) == pytest.approx(y)


def test_ridge_shrinks_toward_mean():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(30, 2))
    y = x @ [1.0, 1.0]
    small, big = train_ranker((x, y), 0.01), train_ranker((x, y), 1000.0)
    assert np.linalg.norm(big.weights) < np.linalg.norm(small.weights)
    assert big.intercept == pytest.approx(y.mean() - x.mean(axis=0) @ big.weights)


def test_singular_without_ridge():
    x = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(SingularSystemError):
        train_ranker((x, [1.0, 2.0, 3.0]), 0.0)
    assert np.isfinite(train_ranker((x, [1.0, 2.0, 3.0]), 0.1).weights).all()


def test_model_round_trip(tmp_path):
    model = train_ranker((np.arange(6.0).reshape(3, 2) ** 2, [0.1, 0.5, 0.2]), 1.0)
    model.save(tmp_path / "m.json")
    back = RankerModel.load(tmp_path / "m.json")
    assert (back.weights == model.weights).all() and back.intercept == model.intercept


def test_dimension_mismatch():
    model = train_ranker((np.eye(3), [1.0, 0.0, 0.0]), 1.0)
    with pytest.raises(InvalidInputError):
        predict_source_values(model, [[1.0, 2.0]])


def test_leave_one_out_prefers_small_lambda_on_clean_data():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(20, 2))
    y = x @ [2.0, -1.0]
    assert leave_one_out_loss((x, y), 0.001) < leave_one_out_loss((x, y), 100.0)


def test_feature_csv(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("target,source,size,overlap\nx,y,1,0.5\ny,x,2,0.25\n")
    t = FeatureTable.read_csv(p)
    assert t.names == ["size", "overlap"] and t.get("y", "x").tolist() == [2.0, 0.25]
    p.write_text("target,source,size\nx,y,abc\n")
    with pytest.raises(InvalidInputError, match=":2:"):
        FeatureTable.read_csv(p)
    p.write_text("t,s,size\n")
    with pytest.raises(InvalidInputError):
        FeatureTable.read_csv(p)
    with pytest.raises(FileNotFoundError):
        FeatureTable.read_csv(tmp_path / "none.csv")
