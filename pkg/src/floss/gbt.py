"""Multiclass gradient boosting over regression trees, written from scratch.

One tree per class per iteration fits the softmax cross-entropy gradients
with second-order leaf values.  Trees grow leaf-wise: the candidate leaf
with the highest split gain is expanded until the leaf budget or the
minimum leaf size binds.  Split search is exact over sorted feature values;
all randomness flows from one seeded generator, so a (seed, config) pair
reproduces the model bit for bit, single-threaded and thread-count
independent.
"""
from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateData,
    FeatureCountMismatch,
    FileUnreadable,
    ModelIncompatible,
    NonFiniteFeature,
)

FORMAT_VERSION = 1
PROB_CLIP = 1e-15


@dataclass(frozen=True)
class TrainConfig:
    """Boosting hyperparameters; defaults match the shipped recipe."""

    n_iterations: int = 150
    eta: float = 0.01
    max_leaves: int = 31
    min_samples_leaf: int = 20
    reg_lambda: float = 1.0
    feature_subsample: float = 0.8
    data_subsample: float = 0.7
    data_resample_period: int = 10
    class_weights: tuple[float, ...] | None = None
    seed: int = 0


@dataclass
class TreeNode:
    """Internal node (feature >= 0) or leaf (feature < 0, value set)."""

    feature: int = -1
    threshold: float = 0.0
    left: TreeNode | None = None
    right: TreeNode | None = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow safety."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def grad_hess(
    probs: np.ndarray, y: np.ndarray, class_weights: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample, per-class gradient p - onehot(y) and hessian p(1-p).

    A sample's class weight (by its true class) multiplies both.
    """
    probs = np.asarray(probs, dtype=np.float64)
    n, k = probs.shape
    g = probs.copy()
    g[np.arange(n), y] -= 1.0
    h = probs * (1.0 - probs)
    if class_weights is not None:
        w = np.asarray(class_weights, dtype=np.float64)[y][:, None]
        g = g * w
        h = h * w
    return g, h


def ce_loss(probs: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy with probabilities clipped away from 0 and 1."""
    p = np.clip(probs[np.arange(len(y)), y], PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(np.log(p)))


def _best_split(
    S: np.ndarray,
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    cols: np.ndarray,
    reg_lambda: float,
    min_samples_leaf: int,
) -> tuple[float, int, int, float] | None:
    """Exact best split over a node.

    ``S`` holds the node's row ids sorted per candidate feature, one row
    per feature.  Returns (gain, local feature index, split position,
    threshold) or None when no positive-gain split satisfies the leaf-size
    floor.  Ties resolve to the lowest feature index, then position.
    """
    nf, n = S.shape
    if n < 2 * min_samples_leaf:
        return None

    gs = g[S]
    hs = h[S]
    G = gs[0].sum()
    H = hs[0].sum()
    GL = np.cumsum(gs[:, :-1], axis=1)
    HL = np.cumsum(hs[:, :-1], axis=1)
    GR = G - GL
    HR = H - HL

    Xs = X[S, cols[:, None]]
    k = np.arange(1, n)
    valid = (Xs[:, 1:] > Xs[:, :-1]) & (k >= min_samples_leaf) & (n - k >= min_samples_leaf)
    if not valid.any():
        return None

    gain = 0.5 * (
        GL**2 / (HL + reg_lambda) + GR**2 / (HR + reg_lambda) - (G * G) / (H + reg_lambda)
    )
    gain[~valid] = -np.inf
    j, i = np.unravel_index(int(np.argmax(gain)), gain.shape)
    best = float(gain[j, i])
    if not best > 0.0:
        return None
    thr = 0.5 * (Xs[j, i] + Xs[j, i + 1])
    if thr >= Xs[j, i + 1]:  # midpoint rounded up to the right value
        thr = float(Xs[j, i])
    return best, int(j), int(i), float(thr)


def _leaf_value(S: np.ndarray, g: np.ndarray, h: np.ndarray, cfg: TrainConfig) -> float:
    rows = S[0]
    G = g[rows].sum()
    H = h[rows].sum()
    return float(-cfg.eta * G / (H + cfg.reg_lambda))


def _grow_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    S_root: np.ndarray,
    cols: np.ndarray,
    cfg: TrainConfig,
) -> TreeNode:
    """Leaf-wise growth: always expand the pending leaf with the best gain."""
    root = TreeNode()
    tick = itertools.count()
    heap: list[tuple[float, int, TreeNode, np.ndarray, tuple[float, int, int, float]]] = []

    cand = _best_split(S_root, X, g, h, cols, cfg.reg_lambda, cfg.min_samples_leaf)
    if cand is None:
        root.value = _leaf_value(S_root, g, h, cfg)
        return root
    heapq.heappush(heap, (-cand[0], next(tick), root, S_root, cand))

    n_leaves = 1
    while heap and n_leaves < cfg.max_leaves:
        _, _, node, S, (gain, j, i, thr) = heapq.heappop(heap)
        node.feature = int(cols[j])
        node.threshold = thr
        node.left = TreeNode()
        node.right = TreeNode()
        n_leaves += 1

        member_left = np.zeros(X.shape[0], dtype=bool)
        member_left[S[j, : i + 1]] = True
        mask = member_left[S]
        children = (
            (node.left, S[mask].reshape(S.shape[0], i + 1)),
            (node.right, S[~mask].reshape(S.shape[0], S.shape[1] - i - 1)),
        )
        for child, Sc in children:
            c = _best_split(Sc, X, g, h, cols, cfg.reg_lambda, cfg.min_samples_leaf)
            if c is None:
                child.value = _leaf_value(Sc, g, h, cfg)
            else:
                heapq.heappush(heap, (-c[0], next(tick), child, Sc, c))

    for _, _, node, S, _ in heap:  # leaves cut off by the budget
        node.value = _leaf_value(S, g, h, cfg)
    return root


@dataclass
class _FlatTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


def _flatten(root: TreeNode) -> _FlatTree:
    feature, threshold, left, right, value = [], [], [], [], []

    def add(node: TreeNode) -> int:
        idx = len(feature)
        feature.append(node.feature)
        threshold.append(node.threshold)
        left.append(-1)
        right.append(-1)
        value.append(node.value)
        if not node.is_leaf:
            left[idx] = add(node.left)
            right[idx] = add(node.right)
        return idx

    add(root)
    return _FlatTree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(value, dtype=np.float64),
    )


def _apply(flat: _FlatTree, X: np.ndarray) -> np.ndarray:
    idx = np.zeros(X.shape[0], dtype=np.int32)
    while True:
        active = np.flatnonzero(flat.feature[idx] >= 0)
        if active.size == 0:
            return flat.value[idx]
        node = idx[active]
        go_left = X[active, flat.feature[node]] <= flat.threshold[node]
        idx[active] = np.where(go_left, flat.left[node], flat.right[node])


@dataclass
class Model:
    """A fitted booster: trees[iteration][class] plus the log-prior offset."""

    trees: list[list[TreeNode]]
    base_score: np.ndarray
    num_classes: int
    feature_count: int
    config: TrainConfig
    feature_layout: tuple[tuple[str, int], ...] | None = None
    meta: dict = field(default_factory=dict)
    train_loss: list[float] = field(default_factory=list)
    _flat: list[list[_FlatTree]] | None = field(default=None, repr=False, compare=False)

    def flat_trees(self) -> list[list[_FlatTree]]:
        if self._flat is None:
            self._flat = [[_flatten(t) for t in row] for row in self.trees]
        return self._flat


def _validate_matrix(X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DegenerateData(f"feature matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("feature matrix contains non-finite values")
    return X


def fit(
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig = TrainConfig(),
    feature_layout: tuple[tuple[str, int], ...] | None = None,
    meta: dict | None = None,
) -> Model:
    """Fit the booster on labels 0..K-1.

    Row subsampling redraws every ``data_resample_period`` iterations;
    feature subsampling redraws per tree.  Trees are fit on the subsample
    but update the margins of every row.
    """
    X = _validate_matrix(X)
    y = np.asarray(y, dtype=np.int64)
    if len(y) != X.shape[0]:
        raise DegenerateData(f"{X.shape[0]} rows vs {len(y)} labels")
    if y.size == 0 or y.min() < 0:
        raise DegenerateData("labels must be non-negative and non-empty")
    n, n_features = X.shape
    k = int(y.max()) + 1
    if k < 2:
        raise DegenerateData("training data holds a single class")
    counts = np.bincount(y, minlength=k)
    if (counts < 2).any():
        lacking = [int(c) for c in np.flatnonzero(counts < 2)]
        raise DegenerateData(f"classes {lacking} have fewer than 2 training samples")

    weights = None
    if config.class_weights is not None:
        weights = np.asarray(config.class_weights, dtype=np.float64)
        if weights.shape != (k,):
            raise DegenerateData(f"class_weights must have {k} entries")

    rng = np.random.default_rng(config.seed)
    order_t = np.argsort(X, axis=0, kind="stable").astype(np.int32).T  # (F, N)

    base = np.log(counts / n)
    margins = np.tile(base, (n, 1))
    n_rows_sub = max(2, int(np.ceil(config.data_subsample * n)))
    n_cols_sub = max(1, int(np.ceil(config.feature_subsample * n_features)))

    order_sub_t = order_t
    trees: list[list[TreeNode]] = []
    train_loss: list[float] = []
    for t in range(config.n_iterations):
        if config.data_subsample < 1.0 and t % config.data_resample_period == 0:
            rows = rng.choice(n, size=n_rows_sub, replace=False)
            member = np.zeros(n, dtype=bool)
            member[rows] = True
            order_sub_t = order_t[member[order_t]].reshape(n_features, n_rows_sub)

        probs = softmax(margins)
        g, h = grad_hess(probs, y, weights)
        row: list[TreeNode] = []
        for cls in range(k):
            if config.feature_subsample < 1.0:
                cols = np.sort(rng.choice(n_features, size=n_cols_sub, replace=False))
            else:
                cols = np.arange(n_features)
            root = _grow_tree(X, g[:, cls], h[:, cls], order_sub_t[cols].copy(), cols, config)
            margins[:, cls] += _apply(_flatten(root), X)
            row.append(root)
        trees.append(row)
        train_loss.append(ce_loss(softmax(margins), y))

    return Model(
        trees=trees,
        base_score=base,
        num_classes=k,
        feature_count=n_features,
        config=config,
        feature_layout=feature_layout,
        meta=dict(meta or {}),
        train_loss=train_loss,
    )


def predict_proba(model: Model, X: np.ndarray) -> np.ndarray:
    """Class probabilities, rows summing to 1."""
    X = _validate_matrix(X)
    if X.shape[1] != model.feature_count:
        raise FeatureCountMismatch(
            f"model expects {model.feature_count} features, got {X.shape[1]}"
        )
    margins = np.tile(model.base_score, (X.shape[0], 1))
    for row in model.flat_trees():
        for cls, flat in enumerate(row):
            margins[:, cls] += _apply(flat, X)
    return softmax(margins)


def predict_label(model: Model, X: np.ndarray) -> np.ndarray:
    """Most probable class per row; ties take the smallest class index."""
    return np.argmax(predict_proba(model, X), axis=1)


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"value": float(node.value)}
    return {
        "feature": int(node.feature),
        "threshold": float(node.threshold),
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(d: dict) -> TreeNode:
    if "value" in d:
        return TreeNode(value=float(d["value"]))
    return TreeNode(
        feature=int(d["feature"]),
        threshold=float(d["threshold"]),
        left=_node_from_dict(d["left"]),
        right=_node_from_dict(d["right"]),
    )


def model_to_json(model: Model) -> str:
    """Serialize deterministically: sorted keys, no whitespace drift."""
    cfg = asdict(model.config)
    if cfg["class_weights"] is not None:
        cfg["class_weights"] = [float(w) for w in cfg["class_weights"]]
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "gbt-softmax",
        "num_classes": model.num_classes,
        "feature_count": model.feature_count,
        "base_score": [float(b) for b in model.base_score],
        "config": cfg,
        "feature_layout": None
        if model.feature_layout is None
        else [[name, int(width)] for name, width in model.feature_layout],
        "meta": model.meta,
        "train_loss": [float(v) for v in model.train_loss],
        "trees": [[_node_to_dict(t) for t in row] for row in model.trees],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def model_from_json(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelIncompatible(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("kind") != "gbt-softmax":
        raise ModelIncompatible("not a gbt-softmax model file")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelIncompatible(
            f"model format {doc.get('format_version')} unsupported (expected {FORMAT_VERSION})"
        )
    cfg_dict = dict(doc["config"])
    if cfg_dict.get("class_weights") is not None:
        cfg_dict["class_weights"] = tuple(cfg_dict["class_weights"])
    layout = doc.get("feature_layout")
    return Model(
        trees=[[_node_from_dict(t) for t in row] for row in doc["trees"]],
        base_score=np.asarray(doc["base_score"], dtype=np.float64),
        num_classes=int(doc["num_classes"]),
        feature_count=int(doc["feature_count"]),
        config=TrainConfig(**cfg_dict),
        feature_layout=None if layout is None else tuple((n, int(w)) for n, w in layout),
        meta=dict(doc.get("meta", {})),
        train_loss=[float(v) for v in doc.get("train_loss", [])],
    )


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model) + "\n")


def load_model(path: str | Path) -> Model:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    return model_from_json(text)
