from .base import (
    Backend,
    ModelConfig,
    TrainedModel,
    deserialize,
    fit,
    improvement_vs_constant,
    model_from_dict,
    model_to_dict,
    predict,
    serialize,
)
from .evaluation import (
    EvalMetrics,
    compare_backends,
    cross_val_predict,
    cross_validate,
    evaluate,
    kfold_indices,
    mae,
    mape,
)
from .registry import ModelRegistry
from .tree import RegressionTree, fit_tree

__all__ = [
    "Backend", "EvalMetrics", "ModelConfig", "ModelRegistry", "RegressionTree", "TrainedModel",
    "compare_backends", "cross_val_predict", "cross_validate", "deserialize", "evaluate", "fit",
    "fit_tree", "improvement_vs_constant", "kfold_indices", "mae", "mape", "model_from_dict",
    "model_to_dict", "predict", "serialize",
]
