"""Random forest binary classifier, exact CART splits, deterministic.

Each tree trains on a bootstrap resample drawn from its own seed stream
(spawned from the master seed), so results are independent of how many
workers train trees. Splits minimize Gini impurity over all unmasked
features with candidate thresholds at midpoints of sorted unique values;
the feature space is tiny, so exact search is cheap and leaves no
unspecified knobs. Equal-gain splits resolve to the lowest feature index,
then the lowest threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import SchemaError
from ..featurizer import FEATURE_NAMES, apply_mask
from ..parallel import parallel_map

LEAF = -1


@dataclass(frozen=True)
class RandomForestConfig:
    n_trees: int = 100
    max_depth: int = 10
    min_samples_split: int = 10
    min_samples_leaf: int = 10
    # Backgrounds vastly outnumber objects; reweighting stays off by default.
    positive_class_weight: float = 1.0

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "positive_class_weight": self.positive_class_weight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestConfig":
        return cls(
            n_trees=int(d["n_trees"]),
            max_depth=int(d["max_depth"]),
            min_samples_split=int(d["min_samples_split"]),
            min_samples_leaf=int(d["min_samples_leaf"]),
            positive_class_weight=float(d.get("positive_class_weight", 1.0)),
        )


@dataclass
class Tree:
    """Flat node arrays; children reference node indices, LEAF marks leaves."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    prob: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] < self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active[idx] = self.feature[node[idx]] != LEAF
        return self.prob[node]

    def node_dicts(self) -> list[dict]:
        return [
            {
                "feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "left": int(self.left[i]),
                "right": int(self.right[i]),
                "prob": float(self.prob[i]),
            }
            for i in range(len(self.feature))
        ]

    @classmethod
    def from_node_dicts(cls, nodes: list[dict], n_features: int) -> "Tree":
        size = len(nodes)
        feature = np.empty(size, dtype=np.intp)
        threshold = np.empty(size)
        left = np.empty(size, dtype=np.intp)
        right = np.empty(size, dtype=np.intp)
        prob = np.empty(size)
        for i, nd in enumerate(nodes):
            feature[i] = int(nd["feature"])
            threshold[i] = float(nd["threshold"])
            left[i] = int(nd["left"])
            right[i] = int(nd["right"])
            prob[i] = float(nd["prob"])
            if not 0.0 <= prob[i] <= 1.0:
                raise SchemaError(f"tree node {i}: leaf probability {prob[i]} outside [0, 1]")
            if feature[i] != LEAF:
                if not 0 <= feature[i] < n_features:
                    raise SchemaError(f"tree node {i}: feature index {feature[i]} out of range")
                for child in (left[i], right[i]):
                    if not i < child < size:
                        raise SchemaError(f"tree node {i}: child index {child} invalid")
        return cls(feature=feature, threshold=threshold, left=left, right=right, prob=prob)


@dataclass
class RandomForestModel:
    trees: list[Tree]
    config: RandomForestConfig
    seed: int
    feature_mask: tuple[bool, ...]
    feature_names: tuple[str, ...]
    degenerate: bool = False
    constant: float | None = None

    @property
    def kind(self) -> str:
        return "random_forest"

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict_objectness(self, X) -> np.ndarray:
        from . import check_features

        X = check_features(X, self.n_features)
        if self.degenerate:
            return np.full(X.shape[0], self.constant)
        X = apply_mask(X, self.feature_mask)
        out = np.zeros(X.shape[0])
        for tree in self.trees:
            out += tree.predict(X)
        return out / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "feature_mask": [bool(m) for m in self.feature_mask],
            "seed": self.seed,
            "config": self.config.to_dict(),
            "degenerate": self.degenerate,
            "constant": self.constant,
            "trees": [tree.node_dicts() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestModel":
        try:
            feature_names = tuple(str(n) for n in d["feature_names"])
            feature_mask = normalize_mask_for(d["feature_mask"], len(feature_names))
            config = RandomForestConfig.from_dict(d["config"])
            degenerate = bool(d["degenerate"])
            constant = None if d["constant"] is None else float(d["constant"])
            trees = [
                Tree.from_node_dicts(nodes, len(feature_names)) for nodes in d["trees"]
            ]
            seed = int(d["seed"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad random forest payload: {exc}") from exc
        if degenerate:
            if constant is None or not 0.0 <= constant <= 1.0:
                raise SchemaError(f"degenerate model constant {constant} invalid")
        elif not trees:
            raise SchemaError("non-degenerate forest has no trees")
        for tree in trees:
            for i in range(len(tree.feature)):
                f = tree.feature[i]
                if f != LEAF and not feature_mask[f]:
                    raise SchemaError(f"tree splits on masked feature {f}")
        return cls(
            trees=trees,
            config=config,
            seed=seed,
            feature_mask=feature_mask,
            feature_names=feature_names,
            degenerate=degenerate,
            constant=constant,
        )


def normalize_mask_for(mask, n_features: int) -> tuple[bool, ...]:
    if mask is None:
        return (True,) * n_features
    mask = tuple(bool(m) for m in mask)
    if len(mask) != n_features:
        raise ValueError(f"feature mask length {len(mask)} != n_features {n_features}")
    return mask


def default_feature_names(n_features: int) -> tuple[str, ...]:
    if n_features == len(FEATURE_NAMES):
        return FEATURE_NAMES
    return tuple(f"x{i}" for i in range(n_features))


def train_random_forest(X, y, config: RandomForestConfig | None = None,
                        seed: int = 0, feature_mask=None,
                        workers: int = 1) -> RandomForestModel:
    """Fit the forest; (X, y, config, seed) fully determine the result."""
    config = config or RandomForestConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-d, got shape {X.shape}")
    n, d = X.shape
    if y.shape != (n,):
        raise ValueError(f"y shape {y.shape} does not match X rows {n}")
    if n < config.min_samples_split:
        raise ValueError(
            f"need at least min_samples_split={config.min_samples_split} rows, got {n}"
        )
    feature_mask = normalize_mask_for(
        feature_mask if feature_mask is not None else (True,) * d, d
    )
    names = default_feature_names(d)

    classes = np.unique(y)
    if len(classes) == 1:
        warnings.warn("training labels contain a single class; emitting the prior")
        return RandomForestModel(
            trees=[],
            config=config,
            seed=seed,
            feature_mask=feature_mask,
            feature_names=names,
            degenerate=True,
            constant=float(classes[0]),
        )

    X = apply_mask(X, feature_mask)
    active_features = [i for i, keep in enumerate(feature_mask) if keep]
    child_seeds = np.random.SeedSequence(seed).spawn(config.n_trees)

    def fit_tree(seq):
        rng = np.random.default_rng(seq)
        idx = rng.integers(0, n, size=n)
        return _grow_tree(X[idx], y[idx], active_features, config)

    trees = parallel_map(fit_tree, child_seeds, workers)
    return RandomForestModel(
        trees=trees,
        config=config,
        seed=seed,
        feature_mask=feature_mask,
        feature_names=names,
    )


def _weighted_counts(y: np.ndarray, pos_weight: float) -> tuple[float, float]:
    pos = float((y == 1).sum()) * pos_weight
    neg = float((y == 0).sum())
    return pos, neg


def _gini(pos: float, neg: float) -> float:
    total = pos + neg
    if total <= 0.0:
        return 0.0
    p = pos / total
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _leaf_prob(y: np.ndarray, pos_weight: float) -> float:
    pos, neg = _weighted_counts(y, pos_weight)
    if pos + neg == 0.0:
        return 0.0
    return pos / (pos + neg)


def _grow_tree(X: np.ndarray, y: np.ndarray, active_features: list[int],
               config: RandomForestConfig) -> Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    prob: list[float] = []

    def new_node() -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        prob.append(0.0)
        return len(feature) - 1

    # (node index, row indices, depth); depth-first so child indices always
    # exceed their parent's, which the serialized form relies on.
    root = new_node()
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, rows, depth = stack.pop()
        y_node = y[rows]
        prob[node] = _leaf_prob(y_node, config.positive_class_weight)
        if depth >= config.max_depth or len(rows) < config.min_samples_split:
            continue
        pos, neg = _weighted_counts(y_node, config.positive_class_weight)
        if pos == 0.0 or neg == 0.0:
            continue
        split = _best_split(X[rows], y_node, active_features, config)
        if split is None:
            continue
        f, thr = split
        go_left = X[rows, f] < thr
        feature[node] = f
        threshold[node] = thr
        left_node = new_node()
        right_node = new_node()
        left[node] = left_node
        right[node] = right_node
        # Push right first so the left child is processed (and numbered) first.
        stack.append((right_node, rows[~go_left], depth + 1))
        stack.append((left_node, rows[go_left], depth + 1))

    return Tree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        prob=np.array(prob),
    )


def _best_split(X_node: np.ndarray, y_node: np.ndarray,
                active_features: list[int],
                config: RandomForestConfig) -> tuple[int, float] | None:
    """Exact best (feature, threshold) by Gini gain, or None.

    Gains depend only on how candidate thresholds partition the samples,
    so predictions are invariant under strictly monotone per-feature
    transformations of the inputs.
    """
    n = len(y_node)
    w = config.positive_class_weight
    pos_total, neg_total = _weighted_counts(y_node, w)
    parent = _gini(pos_total, neg_total)
    total_mass = pos_total + neg_total
    min_leaf = config.min_samples_leaf

    best_gain = 0.0
    best: tuple[int, float] | None = None
    for f in active_features:
        v = X_node[:, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        ys = y_node[order]
        boundaries = np.nonzero(vs[1:] != vs[:-1])[0]  # split after position i
        if boundaries.size == 0:
            continue
        left_n = boundaries + 1
        valid = (left_n >= min_leaf) & (n - left_n >= min_leaf)
        boundaries = boundaries[valid]
        if boundaries.size == 0:
            continue
        pos_cum = np.cumsum((ys == 1).astype(np.float64)) * w
        neg_cum = np.cumsum((ys == 0).astype(np.float64))
        lp = pos_cum[boundaries]
        ln = neg_cum[boundaries]
        rp = pos_total - lp
        rn = neg_total - ln
        lmass = lp + ln
        rmass = rp + rn
        gini_l = np.where(lmass > 0, 1.0 - (lp / np.maximum(lmass, 1e-300)) ** 2
                          - (ln / np.maximum(lmass, 1e-300)) ** 2, 0.0)
        gini_r = np.where(rmass > 0, 1.0 - (rp / np.maximum(rmass, 1e-300)) ** 2
                          - (rn / np.maximum(rmass, 1e-300)) ** 2, 0.0)
        gains = parent - (lmass * gini_l + rmass * gini_r) / total_mass
        k = int(np.argmax(gains))  # first max = lowest threshold
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            i = boundaries[k]
            best = (f, float((vs[i] + vs[i + 1]) / 2.0))
    return best
