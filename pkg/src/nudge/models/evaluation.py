"""One-shot k-fold cross-validation and error metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientData
from .base import Backend, ModelConfig, _as_matrix, fit


def mae(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    return float(np.mean(np.abs(y_pred - y_true)))


def mape(y_true, y_pred) -> float:
    """Mean absolute percentage error as a fraction (0.58, not 58)."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if np.any(y_true <= 0):
        raise ValueError("MAPE needs strictly positive targets")
    return float(np.mean(np.abs(y_pred - y_true) / y_true))


@dataclass(frozen=True)
class EvalMetrics:
    mae_hours: float
    mape: float
    n: int
    per_fold: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.n <= 0 or self.mae_hours < 0 or self.mape < 0:
            raise ValueError("invalid metrics")


def kfold_indices(n: int, k: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Shuffle ``range(n)`` once and cut it into ``k`` near-equal folds."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if n < k:
        raise InsufficientData(f"{n} samples cannot fill {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def cross_val_predict(backend, X, y, k: int = 10, seed: int = 0, config: ModelConfig | None = None):
    """Out-of-fold predictions (clamped) and the folds that produced them."""
    X, _ = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    folds = kfold_indices(len(y), k, seed)
    preds = np.empty(len(y))
    for test in folds:
        train = np.ones(len(y), dtype=bool)
        train[test] = False
        model = fit(backend, X[train], y[train], config)
        preds[test] = model.predict_many(X[test])
    return preds, folds


def evaluate(y_true, y_pred, folds) -> EvalMetrics:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    per_fold = tuple((mae(y_true[f], y_pred[f]), mape(y_true[f], y_pred[f])) for f in folds)
    return EvalMetrics(mae(y_true, y_pred), mape(y_true, y_pred), len(y_true), per_fold)


def cross_validate(
    backend: Backend | str, X, y, k: int = 10, seed: int = 0, config: ModelConfig | None = None
) -> EvalMetrics:
    """Single (non-repeated) k-fold CV; every sample is predicted exactly once."""
    preds, folds = cross_val_predict(backend, X, y, k, seed, config)
    return evaluate(y, preds, folds)


def compare_backends(X, y, k: int = 10, seed: int = 0, config: ModelConfig | None = None) -> dict[Backend, EvalMetrics]:
    return {b: cross_validate(b, X, y, k, seed, config) for b in Backend}
