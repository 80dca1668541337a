"""Objectness estimators: a random forest and an MLP, built from first
principles on numpy. Both map the 5-dim feature vector to p_obj in [0, 1],
record their feature mask and ordering, and serialize deterministically.
"""

from __future__ import annotations

import numpy as np

from ..errors import FeatureMismatchError, SchemaError
from .forest import RandomForestConfig, RandomForestModel, train_random_forest
from .mlp import MlpConfig, MlpModel, train_mlp

ObjectnessModel = RandomForestModel | MlpModel

__all__ = [
    "RandomForestConfig",
    "RandomForestModel",
    "train_random_forest",
    "MlpConfig",
    "MlpModel",
    "train_mlp",
    "ObjectnessModel",
    "predict_objectness",
    "model_from_dict",
]


def predict_objectness(model: ObjectnessModel, X) -> np.ndarray:
    """p_obj per row of X, honoring the model's recorded feature mask."""
    return model.predict_objectness(X)


def model_from_dict(payload: dict) -> ObjectnessModel:
    kind = payload.get("kind")
    if kind == "random_forest":
        return RandomForestModel.from_dict(payload)
    if kind == "mlp":
        return MlpModel.from_dict(payload)
    raise SchemaError(f"unknown model kind {kind!r}")


def check_features(X, n_features: int) -> np.ndarray:
    """Shared input validation for both estimators."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise FeatureMismatchError(f"expected a 2-d feature matrix, got shape {X.shape}")
    if X.shape[1] != n_features:
        raise FeatureMismatchError(
            f"model expects {n_features} features, got {X.shape[1]}"
        )
    if not np.isfinite(X).all():
        raise FeatureMismatchError("feature matrix contains non-finite values")
    return X
