"""Trained lifetime models: fitting, prediction, and serialization."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Sequence

import numpy as np

from ..errors import CorruptModel, InsufficientData, NonFiniteInput, SchemaMismatch, VersionMismatch
from ..events import format_timestamp, parse_timestamp
from ..features import FeatureVector
from .linear import bayesian_ridge, least_squares
from .tree import RegressionTree, fit_tree

MODEL_FORMAT = "nudge-model"
MODEL_VERSION = 1
MIN_TRAINING_ROWS = 10
CLAMP_HOURS = (24.0, 336.0)


class Backend(str, enum.Enum):
    CONSTANT_MEAN = "ConstantMean"
    LEAST_SQUARES = "LeastSquares"
    BAYESIAN_RIDGE = "BayesianRidge"
    GRADIENT_BOOSTING = "GradientBoosting"


@dataclass(frozen=True)
class ModelConfig:
    n_estimators: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 1
    bayes_tol: float = 1e-6
    bayes_max_iter: int = 300
    bayes_alpha_1: float = 1e-6
    bayes_alpha_2: float = 1e-6
    bayes_lambda_1: float = 1e-6
    bayes_lambda_2: float = 1e-6
    ls_jitter: float = 1e-8
    clamp: tuple[float, float] | None = CLAMP_HOURS


@dataclass
class TrainedModel:
    backend: Backend
    params: dict[str, Any]
    feature_schema: tuple[str, ...]
    trained_at: datetime
    training_window: tuple[datetime, datetime] | None = None
    scope: str = "global"
    clamp: tuple[float, float] | None = CLAMP_HOURS
    n_train: int = 0

    @property
    def n_features(self) -> int:
        return len(self.feature_schema)

    # -- prediction ------------------------------------------------------------------

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        p = self.params
        if self.backend is Backend.CONSTANT_MEAN:
            return np.full(X.shape[0], p["mean"])
        if self.backend in (Backend.LEAST_SQUARES, Backend.BAYESIAN_RIDGE):
            return X @ p["weights"] + p["intercept"]
        out = np.full(X.shape[0], p["base"])
        for tree in p["trees"]:
            out = out + p["learning_rate"] * tree.predict(X)
        return out

    def predict_one_raw(self, x: Sequence[float]) -> float:
        if len(x) != self.n_features:
            raise SchemaMismatch(f"expected {self.n_features} features, got {len(x)}")
        p = self.params
        if self.backend is Backend.CONSTANT_MEAN:
            return float(p["mean"])
        if self.backend is not Backend.GRADIENT_BOOSTING:
            return float(np.asarray(x, dtype=float) @ p["weights"] + p["intercept"])
        x = [float(v) for v in x]
        out = p["base"]
        lr = p["learning_rate"]
        for tree in p["trees"]:
            out = out + lr * tree.predict_one(x)
        return float(out)

    def _clamp(self, values):
        if self.clamp is None:
            return values
        return np.clip(values, *self.clamp)

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return self._clamp(self.predict_raw(X))


def _finite(X: np.ndarray, y: np.ndarray) -> None:
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("training data contains NaN or infinity")


def _as_matrix(X) -> tuple[np.ndarray, tuple[str, ...] | None]:
    if len(X) and isinstance(X[0], FeatureVector):
        names = X[0].names
        if any(v.names != names for v in X):
            raise SchemaMismatch("feature vectors with different schemas")
        return np.vstack([v.as_array() for v in X]), names
    return np.atleast_2d(np.asarray(X, dtype=float)), None


def fit_boosting(X: np.ndarray, y: np.ndarray, config: ModelConfig) -> dict[str, Any]:
    base = float(y.mean())
    current = np.full(len(y), base)
    trees: list[RegressionTree] = []
    for _ in range(config.n_estimators):
        tree = fit_tree(X, y - current, config.max_depth, config.min_samples_leaf)
        trees.append(tree)
        current = current + config.learning_rate * tree.predict(X)
    return {"base": base, "learning_rate": float(config.learning_rate), "trees": trees}


def fit(
    backend: Backend | str,
    X,
    y,
    config: ModelConfig | None = None,
    feature_schema: Sequence[str] | None = None,
    trained_at: datetime | None = None,
    training_window: tuple[datetime, datetime] | None = None,
    scope: str = "global",
) -> TrainedModel:
    """Fit one of the four lifetime backends on ``X`` (rows) against hours ``y``."""
    backend = Backend(backend)
    config = config or ModelConfig()
    X, names = _as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if len(y) < MIN_TRAINING_ROWS:
        raise InsufficientData(f"need at least {MIN_TRAINING_ROWS} samples, got {len(y)}")
    _finite(X, y)
    if feature_schema is None:
        feature_schema = names or tuple(f"x{i}" for i in range(X.shape[1]))
    feature_schema = tuple(feature_schema)
    if len(feature_schema) != X.shape[1]:
        raise SchemaMismatch("feature_schema length does not match X")

    if backend is Backend.CONSTANT_MEAN:
        params: dict[str, Any] = {"mean": float(y.mean())}
    elif backend is Backend.LEAST_SQUARES:
        w, b = least_squares(X, y, config.ls_jitter)
        params = {"weights": w, "intercept": b}
    elif backend is Backend.BAYESIAN_RIDGE:
        res = bayesian_ridge(
            X, y, config.bayes_tol, config.bayes_max_iter,
            config.bayes_alpha_1, config.bayes_alpha_2, config.bayes_lambda_1, config.bayes_lambda_2,
        )
        params = {"weights": res.weights, "intercept": res.intercept, "alpha": res.alpha,
                  "lambda": res.lambda_, "n_iter": res.n_iter}
    else:
        params = fit_boosting(X, y, config)

    return TrainedModel(
        backend=backend,
        params=params,
        feature_schema=feature_schema,
        trained_at=trained_at or datetime.now(timezone.utc),
        training_window=training_window,
        scope=scope,
        clamp=config.clamp,
        n_train=len(y),
    )


def predict(model: TrainedModel, x: FeatureVector | Sequence[float]) -> float:
    """Clamped lifetime prediction in hours for one feature vector."""
    if isinstance(x, FeatureVector):
        if x.names != model.feature_schema:
            raise SchemaMismatch("feature vector schema differs from the model's")
        values = x.values
    else:
        values = x
    raw = model.predict_one_raw(values)
    if not math.isfinite(raw):
        raise NonFiniteInput("prediction is not finite")
    if model.clamp is not None:
        raw = min(max(raw, model.clamp[0]), model.clamp[1])
    return raw


def improvement_vs_constant(metrics, constant_metrics) -> tuple[float, float]:
    """Percentage MAE and MAPE gains of a model over the constant-mean baseline."""
    def gain(model_value, const_value):
        return (const_value - model_value) / const_value * 100.0

    return gain(metrics.mae_hours, constant_metrics.mae_hours), gain(metrics.mape, constant_metrics.mape)


# -- serialization -------------------------------------------------------------------

def _params_to_json(backend: Backend, params: dict[str, Any]) -> dict[str, Any]:
    if backend is Backend.CONSTANT_MEAN:
        return {"mean": params["mean"]}
    if backend in (Backend.LEAST_SQUARES, Backend.BAYESIAN_RIDGE):
        out = {k: v for k, v in params.items() if k != "weights"}
        out["weights"] = np.asarray(params["weights"]).tolist()
        return out
    return {
        "base": params["base"],
        "learning_rate": params["learning_rate"],
        "trees": [t.to_dict() for t in params["trees"]],
    }


def _params_from_json(backend: Backend, data: dict[str, Any]) -> dict[str, Any]:
    if backend is Backend.CONSTANT_MEAN:
        return {"mean": float(data["mean"])}
    if backend in (Backend.LEAST_SQUARES, Backend.BAYESIAN_RIDGE):
        out = dict(data)
        out["weights"] = np.asarray(data["weights"], dtype=float)
        out["intercept"] = float(data["intercept"])
        return out
    return {
        "base": float(data["base"]),
        "learning_rate": float(data["learning_rate"]),
        "trees": [RegressionTree.from_dict(t) for t in data["trees"]],
    }


def model_to_dict(model: TrainedModel) -> dict[str, Any]:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "backend": model.backend.value,
        "feature_schema": list(model.feature_schema),
        "trained_at": format_timestamp(model.trained_at),
        "training_window": (
            [format_timestamp(t) for t in model.training_window] if model.training_window else None
        ),
        "scope": model.scope,
        "clamp": list(model.clamp) if model.clamp else None,
        "n_train": model.n_train,
        "params": _params_to_json(model.backend, model.params),
    }


def model_from_dict(data: dict[str, Any]) -> TrainedModel:
    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise CorruptModel("not a serialized lifetime model")
    if data.get("version") != MODEL_VERSION:
        raise VersionMismatch(f"model format version {data.get('version')!r}, expected {MODEL_VERSION}")
    try:
        backend = Backend(data["backend"])
        window = data.get("training_window")
        model = TrainedModel(
            backend=backend,
            params=_params_from_json(backend, data["params"]),
            feature_schema=tuple(data["feature_schema"]),
            trained_at=parse_timestamp(data["trained_at"]),
            training_window=tuple(parse_timestamp(t) for t in window) if window else None,
            scope=data.get("scope", "global"),
            clamp=tuple(data["clamp"]) if data.get("clamp") else None,
            n_train=int(data.get("n_train", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed model: {exc}") from None
    if model.backend in (Backend.LEAST_SQUARES, Backend.BAYESIAN_RIDGE):
        if len(model.params["weights"]) != model.n_features:
            raise CorruptModel("weight vector does not match feature schema")
    return model


def serialize(model: TrainedModel) -> bytes:
    return json.dumps(model_to_dict(model), sort_keys=True).encode("utf-8")


def deserialize(blob: bytes) -> TrainedModel:
    try:
        data = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"cannot decode model: {exc}") from None
    return model_from_dict(data)
