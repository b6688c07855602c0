"""Base learners built from scratch (CART decision tree, bagged forest,
logistic-linear) and the weighted ensemble that emits one fraud probability
per transaction. Training is fully deterministic given (data, config, seed)."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .data import FeatureCodec

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Leaf:
    fraud_probability: float
    sample_count: int


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class DecisionTreeModel:
    root: TreeNode
    max_depth: int
    min_leaf_weight: float
    feature_count: int


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[DecisionTreeModel, ...]
    tree_seeds: tuple[int, ...]
    features_per_split: int

    @property
    def feature_count(self) -> int:
        return self.trees[0].feature_count


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    learning_rate: float
    iterations: int
    l2: float

    @property
    def feature_count(self) -> int:
        return int(self.weights.size)


BaseModel = Union[DecisionTreeModel, ForestModel, LinearModel]


@dataclass(frozen=True)
class EnsembleModel:
    """Weighted average of base-learner probabilities; weights sum to 1."""

    members: tuple[tuple[BaseModel, float], ...]
    codec: FeatureCodec
    model_version: str

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        total = sum(w for _, w in self.members)
        if any(w < 0 for _, w in self.members):
            raise ValueError("member weights must be non-negative")
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"member weights must sum to 1, got {total}")


@dataclass(frozen=True)
class TrainConfig:
    tree_max_depth: int = 8
    min_leaf_weight: float = 1.0
    n_trees: int = 15
    bootstrap: bool = True
    features_per_split: Optional[int] = None  # None -> floor(sqrt(d))
    learning_rate: float = 0.1
    iterations: int = 300
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        for name in ("tree_max_depth", "n_trees", "iterations"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.learning_rate <= 0 or self.min_leaf_weight <= 0:
            raise ValueError("learning_rate and min_leaf_weight must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")


def gini_impurity(class_weight_totals: tuple[float, float]) -> float:
    """1 - sum(p_c^2) over the two classes; 0 for a pure node, 0.5 at 50/50."""
    w0, w1 = class_weight_totals
    if w0 < 0 or w1 < 0:
        raise ValueError("class weight totals must be non-negative")
    total = w0 + w1
    if total == 0:
        raise ValueError("class weight totals are both zero")
    p0 = w0 / total
    p1 = w1 / total
    return 1.0 - (p0 * p0 + p1 * p1)


def best_split(X: np.ndarray, y: np.ndarray, w: np.ndarray,
               candidate_features: Optional[list[int]] = None,
               min_child_weight: float = 0.0,
               ) -> Optional[tuple[int, float, float]]:
    """Best (feature, threshold, impurity_decrease) over candidate features.

    Thresholds sit at midpoints between consecutive distinct sorted values.
    Ties break toward the lower feature index, then the lower threshold.
    Returns None when the node is already pure or no feature has two distinct
    values; zero-gain splits of impure nodes are allowed (XOR-style patterns
    only resolve through them).
    """
    n = X.shape[0]
    if n < 2:
        return None
    if candidate_features is None:
        candidate_features = list(range(X.shape[1]))

    total_w = float(w.sum())
    total_w1 = float(w[y == 1].sum())
    parent = gini_impurity((total_w - total_w1, total_w1))
    if parent == 0.0:
        return None

    best: Optional[tuple[int, float, float]] = None
    for f in sorted(candidate_features):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ws = w[order]
        w1 = ws * (y[order] == 1)

        cut = np.flatnonzero(xs[:-1] != xs[1:])
        if cut.size == 0:
            continue
        lw = np.cumsum(ws)[cut]
        lw1 = np.cumsum(w1)[cut]
        rw = total_w - lw
        rw1 = total_w1 - lw1

        gini_l = 1.0 - ((lw1 ** 2 + (lw - lw1) ** 2) / (lw ** 2))
        gini_r = 1.0 - ((rw1 ** 2 + (rw - rw1) ** 2) / (rw ** 2))
        decrease = parent - (lw * gini_l + rw * gini_r) / total_w

        ok = (lw >= min_child_weight) & (rw >= min_child_weight)
        decrease = np.where(ok, decrease, -np.inf)
        i = int(np.argmax(decrease))  # first max -> lowest threshold
        gain = float(decrease[i])
        if gain == -np.inf:
            continue
        gain = max(gain, 0.0)
        if best is None or gain > best[2]:
            threshold = float((xs[cut[i]] + xs[cut[i] + 1]) / 2.0)
            best = (f, threshold, gain)
    return best


def _grow(X: np.ndarray, y: np.ndarray, w: np.ndarray, depth: int,
          cfg: TrainConfig, rng: Optional[np.random.Generator],
          k: Optional[int]) -> TreeNode:
    total_w = float(w.sum())
    w1 = float(w[y == 1].sum())
    leaf = Leaf(fraud_probability=w1 / total_w, sample_count=int(y.size))
    if depth >= cfg.tree_max_depth or total_w < 2 * cfg.min_leaf_weight:
        return leaf

    if rng is not None and k is not None and k < X.shape[1]:
        candidates = sorted(int(c) for c in rng.choice(X.shape[1], size=k, replace=False))
    else:
        candidates = None
    found = best_split(X, y, w, candidates, min_child_weight=cfg.min_leaf_weight)
    if found is None:
        return leaf
    f, threshold, _ = found
    mask = X[:, f] < threshold
    left = _grow(X[mask], y[mask], w[mask], depth + 1, cfg, rng, k)
    right = _grow(X[~mask], y[~mask], w[~mask], depth + 1, cfg, rng, k)
    return Split(feature_index=f, threshold=threshold, left=left, right=right)


def _check_training_data(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> None:
    if X.shape[0] == 0:
        raise ValueError("cannot train on empty data")
    if np.any(w <= 0):
        raise ValueError("sample weights must be positive")
    if X.shape[0] != y.size or y.size != w.size:
        raise ValueError("X, y, w length mismatch")


def train_tree(X: np.ndarray, y: np.ndarray, w: np.ndarray,
               cfg: TrainConfig = TrainConfig()) -> DecisionTreeModel:
    """CART tree on weighted rows: recursive Gini splits until max_depth,
    min_leaf_weight, or no impurity decrease."""
    _check_training_data(X, y, w)
    root = _grow(X, y, w, 0, cfg, rng=None, k=None)
    return DecisionTreeModel(
        root=root,
        max_depth=cfg.tree_max_depth,
        min_leaf_weight=cfg.min_leaf_weight,
        feature_count=X.shape[1],
    )


def train_forest(X: np.ndarray, y: np.ndarray, w: np.ndarray,
                 cfg: TrainConfig = TrainConfig()) -> ForestModel:
    """Bagged trees: each member trains on a seeded bootstrap resample with a
    random feature subset per split (default floor(sqrt(d)))."""
    _check_training_data(X, y, w)
    d = X.shape[1]
    k = cfg.features_per_split if cfg.features_per_split is not None else max(1, int(math.isqrt(d)))
    master = np.random.default_rng(cfg.seed)
    tree_seeds = tuple(int(s) for s in master.integers(0, 2 ** 63, size=cfg.n_trees))

    trees = []
    for seed in tree_seeds:
        rng = np.random.default_rng(seed)
        if cfg.bootstrap:
            idx = rng.integers(0, X.shape[0], size=X.shape[0])
            Xi, yi, wi = X[idx], y[idx], w[idx]
        else:
            Xi, yi, wi = X, y, w
        root = _grow(Xi, yi, wi, 0, cfg, rng=rng, k=k)
        trees.append(DecisionTreeModel(
            root=root, max_depth=cfg.tree_max_depth,
            min_leaf_weight=cfg.min_leaf_weight, feature_count=d))
    return ForestModel(trees=tuple(trees), tree_seeds=tree_seeds, features_per_split=k)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_loss(X: np.ndarray, y: np.ndarray, w: np.ndarray,
                  beta: np.ndarray, bias: float, l2: float) -> float:
    """Weighted negative log-likelihood plus L2 penalty on the weights."""
    wn = w / w.sum()
    z = X @ beta + bias
    # log(1 + exp(-z)) computed stably
    nll = wn * (np.logaddexp(0.0, -z) * y + np.logaddexp(0.0, z) * (1 - y))
    return float(nll.sum() + 0.5 * l2 * float(beta @ beta))


def logistic_gradient(X: np.ndarray, y: np.ndarray, w: np.ndarray,
                      beta: np.ndarray, bias: float, l2: float,
                      ) -> tuple[np.ndarray, float]:
    wn = w / w.sum()
    p = _sigmoid(X @ beta + bias)
    err = wn * (p - y)
    return X.T @ err + l2 * beta, float(err.sum())


def train_linear(X: np.ndarray, y: np.ndarray, w: np.ndarray,
                 cfg: TrainConfig = TrainConfig()) -> LinearModel:
    """Logistic regression by fixed-iteration full-batch gradient descent
    from zero initialization; the bias is not penalized."""
    _check_training_data(X, y, w)
    beta = np.zeros(X.shape[1])
    bias = 0.0
    yf = y.astype(float)
    for _ in range(cfg.iterations):
        g, gb = logistic_gradient(X, yf, w, beta, bias, cfg.l2)
        beta = beta - cfg.learning_rate * g
        bias = bias - cfg.learning_rate * gb
    return LinearModel(weights=beta, bias=bias, learning_rate=cfg.learning_rate,
                       iterations=cfg.iterations, l2=cfg.l2)


def _tree_descend(node: TreeNode, x: np.ndarray) -> float:
    while isinstance(node, Split):
        node = node.left if x[node.feature_index] < node.threshold else node.right
    return node.fraud_probability


def predict_proba(model: BaseModel, x: np.ndarray) -> float:
    """Fraud probability in [0, 1] for a single encoded vector."""
    if x.shape != (model.feature_count,):
        raise ValueError(
            f"feature vector length {x.shape} does not match model width "
            f"{model.feature_count}")
    if isinstance(model, DecisionTreeModel):
        return _tree_descend(model.root, x)
    if isinstance(model, ForestModel):
        return sum(_tree_descend(t.root, x) for t in model.trees) / len(model.trees)
    if isinstance(model, LinearModel):
        return float(_sigmoid(float(model.weights @ x) + model.bias))
    raise TypeError(f"unknown model type {type(model).__name__}")


def _tree_batch(node: TreeNode, X: np.ndarray, out: np.ndarray, idx: np.ndarray) -> None:
    if idx.size == 0:
        return
    if isinstance(node, Leaf):
        out[idx] = node.fraud_probability
        return
    mask = X[idx, node.feature_index] < node.threshold
    _tree_batch(node.left, X, out, idx[mask])
    _tree_batch(node.right, X, out, idx[~mask])


def predict_proba_batch(model: BaseModel, X: np.ndarray) -> np.ndarray:
    """Vectorized predict_proba over the rows of X."""
    if X.shape[1] != model.feature_count:
        raise ValueError("feature matrix width does not match model")
    n = X.shape[0]
    if isinstance(model, DecisionTreeModel):
        out = np.zeros(n)
        _tree_batch(model.root, X, out, np.arange(n))
        return out
    if isinstance(model, ForestModel):
        acc = np.zeros(n)
        buf = np.zeros(n)
        rows = np.arange(n)
        for t in model.trees:
            _tree_batch(t.root, X, buf, rows)
            acc += buf
        return acc / len(model.trees)
    if isinstance(model, LinearModel):
        return _sigmoid(X @ model.weights + model.bias)
    raise TypeError(f"unknown model type {type(model).__name__}")


def ensemble_predict(ens: EnsembleModel, x: np.ndarray) -> float:
    """Weighted sum of member probabilities."""
    return float(sum(w * predict_proba(m, x) for m, w in ens.members))


def ensemble_predict_batch(ens: EnsembleModel, X: np.ndarray) -> np.ndarray:
    out = np.zeros(X.shape[0])
    for m, w in ens.members:
        out += w * predict_proba_batch(m, X)
    return out


def build_ensemble(members: list[BaseModel], codec: FeatureCodec,
                   weights: Optional[list[float]] = None) -> EnsembleModel:
    """Assemble an ensemble (equal weights by default) with a derived,
    content-addressed model version."""
    if weights is None:
        weights = [1.0 / len(members)] * len(members)
    total = sum(weights)
    weights = [w / total for w in weights]
    pairs = tuple(zip(members, weights))
    body = _document_body(pairs, codec)
    digest = hashlib.sha256(
        json.dumps(body, sort_keys=True, separators=(",", ":")).encode()).hexdigest()
    return EnsembleModel(members=pairs, codec=codec, model_version=f"v1-{digest[:12]}")


# --- serialization ---------------------------------------------------------

def _node_to_obj(node: TreeNode):
    if isinstance(node, Leaf):
        return {"leaf": [node.fraud_probability, node.sample_count]}
    return {"split": [node.feature_index, node.threshold,
                      _node_to_obj(node.left), _node_to_obj(node.right)]}


def _node_from_obj(obj) -> TreeNode:
    if "leaf" in obj:
        p, n = obj["leaf"]
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"leaf probability {p} outside [0, 1]")
        return Leaf(fraud_probability=p, sample_count=int(n))
    if "split" in obj:
        f, t, left, right = obj["split"]
        return Split(feature_index=int(f), threshold=float(t),
                     left=_node_from_obj(left), right=_node_from_obj(right))
    raise ValueError("corrupt model document: tree node is neither leaf nor split")


def _member_to_obj(model: BaseModel) -> dict:
    if isinstance(model, DecisionTreeModel):
        return {"kind": "tree", "root": _node_to_obj(model.root),
                "max_depth": model.max_depth,
                "min_leaf_weight": model.min_leaf_weight,
                "feature_count": model.feature_count}
    if isinstance(model, ForestModel):
        return {"kind": "forest",
                "trees": [_member_to_obj(t) for t in model.trees],
                "tree_seeds": list(model.tree_seeds),
                "features_per_split": model.features_per_split}
    if isinstance(model, LinearModel):
        return {"kind": "linear", "weights": [float(v) for v in model.weights],
                "bias": model.bias, "learning_rate": model.learning_rate,
                "iterations": model.iterations, "l2": model.l2}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _member_from_obj(obj: dict) -> BaseModel:
    kind = obj.get("kind")
    if kind == "tree":
        return DecisionTreeModel(
            root=_node_from_obj(obj["root"]), max_depth=int(obj["max_depth"]),
            min_leaf_weight=float(obj["min_leaf_weight"]),
            feature_count=int(obj["feature_count"]))
    if kind == "forest":
        return ForestModel(
            trees=tuple(_member_from_obj(t) for t in obj["trees"]),
            tree_seeds=tuple(int(s) for s in obj["tree_seeds"]),
            features_per_split=int(obj["features_per_split"]))
    if kind == "linear":
        return LinearModel(
            weights=np.array([float(v) for v in obj["weights"]]),
            bias=float(obj["bias"]), learning_rate=float(obj["learning_rate"]),
            iterations=int(obj["iterations"]), l2=float(obj["l2"]))
    raise ValueError(f"corrupt model document: unknown member kind {kind!r}")


def _document_body(members, codec: FeatureCodec) -> dict:
    return {
        "codec": codec.to_dict(),
        "members": [_member_to_obj(m) for m, _ in members],
        "weights": [w for _, w in members],
    }


def save_model(ens: EnsembleModel) -> bytes:
    """Versioned self-describing JSON document; numbers keep full precision."""
    doc = {"schema_version": SCHEMA_VERSION, "model_version": ens.model_version}
    doc.update(_document_body(ens.members, ens.codec))
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()


def load_model(data: bytes) -> EnsembleModel:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"corrupt model document: {exc}")
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ValueError("corrupt model document: missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported schema_version {doc['schema_version']}, "
            f"expected {SCHEMA_VERSION}")
    try:
        codec = FeatureCodec.from_dict(doc["codec"])
        members = tuple(
            (_member_from_obj(m), float(w))
            for m, w in zip(doc["members"], doc["weights"], strict=True))
        return EnsembleModel(members=members, codec=codec,
                             model_version=str(doc["model_version"]))
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"corrupt model document: {exc}")
