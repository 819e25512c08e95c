import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nudge.errors import InsufficientData
from nudge.models import Backend, cross_val_predict, cross_validate, evaluate, kfold_indices, mae, mape


@given(st.integers(2, 300), st.integers(2, 12), st.integers(0, 2**31))
@settings(max_examples=200, deadline=None)
def test_folds_partition_the_index_set(n, k, seed):
    if n < k:
        with pytest.raises(InsufficientData):
            kfold_indices(n, k, seed)
        return
    folds = kfold_indices(n, k, seed)
    assert len(folds) == k
    joined = np.concatenate(folds)
    assert sorted(joined.tolist()) == list(range(n))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


def test_folds_depend_only_on_seed():
    assert all(np.array_equal(a, b) for a, b in zip(kfold_indices(50, 5, 7), kfold_indices(50, 5, 7)))
    assert any(not np.array_equal(a, b) for a, b in zip(kfold_indices(50, 5, 7), kfold_indices(50, 5, 8)))


def test_perfect_predictor_scores_zero():
    y = np.array([30.0, 60, 90, 120])
    folds = kfold_indices(4, 2, 0)
    m = evaluate(y, y, folds)
    assert m.mae_hours == 0 and m.mape == 0 and m.n == 4


def test_constant_mean_two_fold_by_hand():
    # 20 points: ten at 50h, ten at 150h.  Fold means are computed by hand below.
    y = np.array([50.0] * 10 + [150.0] * 10)
    X = np.zeros((20, 1))
    preds, folds = cross_val_predict(Backend.CONSTANT_MEAN, X, y, k=2, seed=3)
    expected = np.empty(20)
    for test in folds:
        train = np.setdiff1d(np.arange(20), test)
        expected[test] = y[train].mean()
    assert np.array_equal(preds, expected)
    m = cross_validate(Backend.CONSTANT_MEAN, X, y, k=2, seed=3)
    assert m.mae_hours == pytest.approx(np.mean(np.abs(expected - y)))
    assert m.mape == pytest.approx(np.mean(np.abs(expected - y) / y))


def test_every_sample_predicted_once_and_repeatable():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 3))
    y = rng.uniform(24, 300, 60)
    a = cross_validate(Backend.GRADIENT_BOOSTING, X, y, k=10, seed=5)
    b = cross_validate(Backend.GRADIENT_BOOSTING, X, y, k=10, seed=5)
    assert a == b
    assert a.n == 60 and len(a.per_fold) == 10


def test_metrics():
    assert mae([10, 20], [12, 16]) == 3.0
    assert mape([10, 20], [12, 16]) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        mape([0, 1], [1, 1])


@given(st.lists(st.floats(24, 336), min_size=20, max_size=40))
@settings(max_examples=50, deadline=None)
def test_constant_model_predicts_held_out_fold_mean(ys):
    y = np.array(ys)
    preds, folds = cross_val_predict(Backend.CONSTANT_MEAN, np.zeros((len(y), 1)), y, k=2, seed=0)
    for test in folds:
        train = np.setdiff1d(np.arange(len(y)), test)
        assert np.allclose(preds[test], y[train].mean())
