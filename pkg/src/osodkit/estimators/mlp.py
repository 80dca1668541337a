"""Multilayer perceptron binary classifier trained with Adam.

Architecture is input -> 96 -> 48 -> 24 -> 1 by default: rectifier on the
hidden layers, logistic output, mean binary cross-entropy loss. Weights
initialize from a seeded uniform fan-in scheme; the shuffle stream is also
seeded, and all reductions run in a fixed order, so a seed fully
determines the trained model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteLossError, SchemaError
from ..featurizer import apply_mask
from .forest import default_feature_names, normalize_mask_for


@dataclass(frozen=True)
class MlpConfig:
    hidden_sizes: tuple[int, ...] = (96, 48, 24)
    learning_rate: float = 0.001
    batch_size: int = 64
    epochs: int = 50
    # Adam moment parameters: unstated upstream, conventional defaults.
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    early_stop: bool = False
    holdout_fraction: float = 0.1
    patience: int = 5

    def to_dict(self) -> dict:
        return {
            "hidden_sizes": list(self.hidden_sizes),
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "early_stop": self.early_stop,
            "holdout_fraction": self.holdout_fraction,
            "patience": self.patience,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpConfig":
        return cls(
            hidden_sizes=tuple(int(h) for h in d["hidden_sizes"]),
            learning_rate=float(d["learning_rate"]),
            batch_size=int(d["batch_size"]),
            epochs=int(d["epochs"]),
            beta1=float(d.get("beta1", 0.9)),
            beta2=float(d.get("beta2", 0.999)),
            adam_eps=float(d.get("adam_eps", 1e-8)),
            early_stop=bool(d.get("early_stop", False)),
            holdout_fraction=float(d.get("holdout_fraction", 0.1)),
            patience=int(d.get("patience", 5)),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_with_logits(z: np.ndarray, y: np.ndarray) -> float:
    # mean(max(z, 0) - y*z + log(1 + exp(-|z|))), stable for large |z|
    return float(np.mean(np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z)))))


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    config: MlpConfig
    seed: int
    feature_mask: tuple[bool, ...]
    feature_names: tuple[str, ...]
    loss_history: list[float] = field(default_factory=list, repr=False)

    @property
    def kind(self) -> str:
        return "mlp"

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def forward_logits(self, X: np.ndarray) -> np.ndarray:
        """Logits for already-masked input, shape (n,)."""
        h = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W + b
            if i != last:
                h = np.maximum(h, 0.0)
        return h[:, 0]

    def predict_objectness(self, X) -> np.ndarray:
        from . import check_features

        X = check_features(X, self.n_features)
        return _sigmoid(self.forward_logits(apply_mask(X, self.feature_mask)))

    def loss_and_gradients(self, X, y) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
        """Mean BCE on one batch plus analytic (dW, db) per layer.

        Used by training and by the finite-difference gradient check; the
        input is masked here so both callers agree on the function being
        differentiated.
        """
        X = apply_mask(np.asarray(X, dtype=np.float64), self.feature_mask)
        y = np.asarray(y, dtype=np.float64)
        n = X.shape[0]
        last = len(self.weights) - 1

        activations = [X]
        pre = []
        h = X
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            pre.append(z)
            h = z if i == last else np.maximum(z, 0.0)
            activations.append(h)

        logits = pre[-1][:, 0]
        loss = _bce_with_logits(logits, y)

        delta = (_sigmoid(logits) - y)[:, None] / n
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.weights)
        for i in range(last, -1, -1):
            grads[i] = (activations[i].T @ delta, delta.sum(axis=0))
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0.0)
        return loss, grads

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "feature_mask": [bool(m) for m in self.feature_mask],
            "seed": self.seed,
            "config": self.config.to_dict(),
            "layers": [
                {"weights": W.tolist(), "bias": b.tolist()}
                for W, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        try:
            feature_names = tuple(str(n) for n in d["feature_names"])
            feature_mask = normalize_mask_for(d["feature_mask"], len(feature_names))
            config = MlpConfig.from_dict(d["config"])
            seed = int(d["seed"])
            weights = [np.asarray(layer["weights"], dtype=np.float64) for layer in d["layers"]]
            biases = [np.asarray(layer["bias"], dtype=np.float64) for layer in d["layers"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad mlp payload: {exc}") from exc
        expect = len(feature_names)
        for i, (W, b) in enumerate(zip(weights, biases)):
            if W.ndim != 2 or b.ndim != 1 or W.shape[0] != expect or W.shape[1] != b.shape[0]:
                raise SchemaError(f"layer {i}: shapes do not chain ({W.shape}, {b.shape})")
            if not (np.isfinite(W).all() and np.isfinite(b).all()):
                raise SchemaError(f"layer {i}: non-finite parameters")
            expect = W.shape[1]
        if expect != 1:
            raise SchemaError(f"output layer width must be 1, got {expect}")
        return cls(
            weights=weights,
            biases=biases,
            config=config,
            seed=seed,
            feature_mask=feature_mask,
            feature_names=feature_names,
        )


def init_mlp(n_features: int, config: MlpConfig, seed: int,
             feature_mask=None) -> MlpModel:
    """Fresh model with uniform fan-in initialization from the seed."""
    rng = np.random.default_rng(seed)
    sizes = (n_features, *config.hidden_sizes, 1)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpModel(
        weights=weights,
        biases=biases,
        config=config,
        seed=seed,
        feature_mask=normalize_mask_for(
            feature_mask if feature_mask is not None else (True,) * n_features,
            n_features,
        ),
        feature_names=default_feature_names(n_features),
    )


def train_mlp(X, y, config: MlpConfig | None = None, seed: int = 0,
              feature_mask=None) -> MlpModel:
    """Adam on mean BCE with a fixed epoch budget.

    With early_stop enabled, a seeded 10% holdout is carved off and the
    best-holdout-loss weights are kept (patience epochs without
    improvement end training early).
    """
    config = config or MlpConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-d, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y shape {y.shape} does not match X rows {X.shape[0]}")

    model = init_mlp(X.shape[1], config, seed, feature_mask)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])

    X_hold = y_hold = None
    if config.early_stop:
        n_hold = int(X.shape[0] * config.holdout_fraction)
        if n_hold > 0:
            perm = rng.permutation(X.shape[0])
            hold, keep = perm[:n_hold], perm[n_hold:]
            X_hold, y_hold = X[hold], y[hold]
            X, y = X[keep], y[keep]

    n = X.shape[0]
    m_state = [(np.zeros_like(W), np.zeros_like(b))
               for W, b in zip(model.weights, model.biases)]
    v_state = [(np.zeros_like(W), np.zeros_like(b))
               for W, b in zip(model.weights, model.biases)]
    step = 0
    best_hold = np.inf
    best_params = None
    stall = 0

    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = perm[start:start + config.batch_size]
            loss, grads = model.loss_and_gradients(X[batch], y[batch])
            if not np.isfinite(loss):
                raise NonFiniteLossError(epoch)
            epoch_loss += loss * len(batch)
            step += 1
            bc1 = 1.0 - config.beta1 ** step
            bc2 = 1.0 - config.beta2 ** step
            for i, (dW, db) in enumerate(grads):
                mW, mb = m_state[i]
                vW, vb = v_state[i]
                mW = config.beta1 * mW + (1.0 - config.beta1) * dW
                mb = config.beta1 * mb + (1.0 - config.beta1) * db
                vW = config.beta2 * vW + (1.0 - config.beta2) * dW * dW
                vb = config.beta2 * vb + (1.0 - config.beta2) * db * db
                m_state[i] = (mW, mb)
                v_state[i] = (vW, vb)
                model.weights[i] -= config.learning_rate * (mW / bc1) / (
                    np.sqrt(vW / bc2) + config.adam_eps
                )
                model.biases[i] -= config.learning_rate * (mb / bc1) / (
                    np.sqrt(vb / bc2) + config.adam_eps
                )
        model.loss_history.append(epoch_loss / n)

        if X_hold is not None:
            hold_loss = _bce_with_logits(
                model.forward_logits(apply_mask(X_hold, model.feature_mask)), y_hold
            )
            if hold_loss < best_hold:
                best_hold = hold_loss
                best_params = (
                    [W.copy() for W in model.weights],
                    [b.copy() for b in model.biases],
                )
                stall = 0
            else:
                stall += 1
                if stall >= config.patience:
                    break

    if best_params is not None:
        model.weights, model.biases = best_params
    return model
