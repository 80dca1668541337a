#!/usr/bin/env python3
"""Training the objectness estimators on synthetic detector outputs.

Queries are labeled object/background by greedy one-to-one matching
against exhaustive ground truth (known and unknown objects both count as
positives), then a random forest and an MLP learn p_obj from the 5
features. Training is fully seeded: the same inputs and seed always give
byte-identical models.
"""

import os
import tempfile

import numpy as np

from osodkit import (
    SynthConfig,
    build_training_set,
    generate,
    load_model,
    save_model,
    train_mlp,
    train_random_forest,
)
from osodkit.estimators import MlpConfig, RandomForestConfig

# Synthetic detector outputs with planted roles.
result = generate(SynthConfig(n_images=20, queries_per_image=80, feat_dim=32, seed=42))
X, y = build_training_set(result.dump, result.dataset, iou_threshold=0.5)
print(f"training set: {X.shape[0]} queries, {int(y.sum())} labeled object")

# Random forest: exact Gini splits over the 5 features.
rf = train_random_forest(X, y, RandomForestConfig(n_trees=50), seed=7)
p_rf = rf.predict_objectness(X)
print(f"forest train accuracy: {((p_rf > 0.5) == y).mean():.3f}")

# MLP: Adam on binary cross-entropy; loss history is kept on the model.
mlp = train_mlp(X, y, MlpConfig(epochs=20), seed=7)
print(f"mlp loss: epoch 1 {mlp.loss_history[0]:.4f} -> "
      f"epoch 20 {mlp.loss_history[-1]:.4f}")

# Both models serialize to versioned JSON and round-trip exactly.
with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "model.json")
    save_model(rf, path)
    clone = load_model(path)
    assert np.array_equal(rf.predict_objectness(X), clone.predict_objectness(X))
    print(f"model file round-trips exactly ({os.path.getsize(path)} bytes)")

# Ablation-style training: drop the hidden-layer score.
from osodkit.featurizer import mask_without

rf_masked = train_random_forest(X, y, RandomForestConfig(n_trees=50), seed=7,
                                feature_mask=mask_without("f_nan"))
print("masked model recorded mask:", rf_masked.feature_mask)
