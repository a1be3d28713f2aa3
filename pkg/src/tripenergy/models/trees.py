"""CART regression trees plus the two ensembles built from them.

Splits minimize the summed squared error of the two children (variance
reduction). Ties break toward the lowest feature index, then the lowest
threshold, so a retrain on identical data reproduces the identical tree.
The random forest bootstrap-aggregates trees with per-split feature
subsampling; gradient boosting fits shallow trees to residuals with
shrinkage.
"""

from __future__ import annotations

import numpy as np

from ..rng import make_rng
from .base import DtParams, GbParams, RfParams


def grow_tree(X: np.ndarray, y: np.ndarray, max_depth: int | None = None,
              min_samples_leaf: int = 1, rng: np.random.Generator | None = None,
              feature_fraction: float | None = None) -> dict:
    """Grow a CART regression tree; returns a flat node-array representation.

    Nodes are parallel arrays; leaves have feature == -1 and carry the mean
    label of their training rows in `value`.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def add_node(mean: float) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(mean)
        return len(feature) - 1

    # Explicit stack: full-depth trees on large trips would blow the
    # recursion limit. Right child pushed first so the left subtree is
    # built first (fixed preorder keeps rng consumption deterministic).
    stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(n), 0, -1, False)]
    while stack:
        idx, depth, parent, is_right = stack.pop()
        y_node = y[idx]
        node = add_node(float(y_node.mean()))
        if parent >= 0:
            (right if is_right else left)[parent] = node

        if max_depth is not None and depth >= max_depth:
            continue
        if idx.size < 2 * min_samples_leaf or np.all(y_node == y_node[0]):
            continue

        if feature_fraction is not None and feature_fraction < 1.0:
            k = max(1, int(round(feature_fraction * d)))
            feats = np.sort(rng.choice(d, size=k, replace=False))
        else:
            feats = np.arange(d)

        best = _best_split(X, y, idx, feats, min_samples_leaf)
        if best is None:
            continue
        f, thr = best
        go_left = X[idx, f] <= thr
        left_idx, right_idx = idx[go_left], idx[~go_left]
        if left_idx.size == 0 or right_idx.size == 0:  # adjacent-float midpoint
            continue
        feature[node] = f
        threshold[node] = thr
        stack.append((right_idx, depth + 1, node, True))
        stack.append((left_idx, depth + 1, node, False))

    return {
        "feature": np.asarray(feature, dtype=int),
        "threshold": np.asarray(threshold, dtype=float),
        "left": np.asarray(left, dtype=int),
        "right": np.asarray(right, dtype=int),
        "value": np.asarray(value, dtype=float),
    }


def _best_split(X: np.ndarray, y: np.ndarray, idx: np.ndarray,
                feats: np.ndarray, min_samples_leaf: int) -> tuple[int, float] | None:
    """Lowest-SSE split over the candidate features; None if no legal split.

    Prefix sums evaluate every cut of a sorted column in O(n). Strict
    improvement plus ascending iteration realizes the tie-break order.
    """
    y_node = y[idx]
    m = idx.size
    total_sum = y_node.sum()
    total_sq = float(y_node @ y_node)
    counts = np.arange(1, m, dtype=float)

    best: tuple[int, float] | None = None
    best_score = np.inf
    for f in feats:
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        v = vals[order]
        ys = y_node[order]
        legal = (v[:-1] < v[1:]) & (counts >= min_samples_leaf) \
            & (m - counts >= min_samples_leaf)
        if not legal.any():
            continue
        csum = np.cumsum(ys)[:-1]
        csq = np.cumsum(ys * ys)[:-1]
        sse_left = csq - csum * csum / counts
        rsum = total_sum - csum
        sse_right = (total_sq - csq) - rsum * rsum / (m - counts)
        score = np.where(legal, sse_left + sse_right, np.inf)
        i = int(np.argmin(score))  # first minimum -> lowest threshold
        if score[i] < best_score:
            best_score = float(score[i])
            best = (int(f), float(0.5 * (v[i] + v[i + 1])))
    return best


def predict_tree(tree: dict, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    feature = np.asarray(tree["feature"], dtype=int)
    threshold = np.asarray(tree["threshold"], dtype=float)
    left = np.asarray(tree["left"], dtype=int)
    right = np.asarray(tree["right"], dtype=int)
    value = np.asarray(tree["value"], dtype=float)

    node = np.zeros(X.shape[0], dtype=int)
    while True:
        f = feature[node]
        active = f >= 0
        if not active.any():
            break
        rows = np.nonzero(active)[0]
        cur = node[rows]
        go_left = X[rows, f[rows]] <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
    return value[node]


def train_dt(X: np.ndarray, y: np.ndarray, hp: DtParams) -> dict:
    tree = grow_tree(X, y, max_depth=hp.max_depth,
                     min_samples_leaf=hp.min_samples_leaf)
    return {"tree": tree}


def predict_dt(params: dict, X: np.ndarray) -> np.ndarray:
    return predict_tree(params["tree"], X)


def train_rf(X: np.ndarray, y: np.ndarray, hp: RfParams, seed: int) -> dict:
    n = X.shape[0]
    trees = []
    for t in range(hp.n_trees):
        rng = make_rng(seed, stream=t + 1)
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], y[boot], max_depth=hp.max_depth,
                               min_samples_leaf=hp.min_samples_leaf,
                               rng=rng, feature_fraction=hp.feature_subsample))
    return {"trees": trees}


def predict_rf(params: dict, X: np.ndarray) -> np.ndarray:
    preds = [predict_tree(tree, X) for tree in params["trees"]]
    return np.mean(preds, axis=0)


def train_gb(X: np.ndarray, y: np.ndarray, hp: GbParams) -> dict:
    base = float(y.mean())
    current = np.full(y.shape, base)
    trees = []
    train_loss = []
    for _ in range(hp.n_trees):
        residual = y - current
        tree = grow_tree(X, residual, max_depth=hp.max_depth,
                         min_samples_leaf=hp.min_samples_leaf)
        current = current + hp.learning_rate * predict_tree(tree, X)
        trees.append(tree)
        train_loss.append(float(np.mean((y - current) ** 2)))
    return {"base": base, "learning_rate": hp.learning_rate,
            "trees": trees, "train_loss": train_loss}


def predict_gb(params: dict, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.full(X.shape[0], params["base"], dtype=float)
    for tree in params["trees"]:
        out += params["learning_rate"] * predict_tree(tree, X)
    return out
