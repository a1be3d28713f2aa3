"""k-nearest-neighbours regression over the stored training set.

Distances are plain Euclidean on raw features; ties in distance resolve by
training-row order (stable sort), so predictions are deterministic.
"""

from __future__ import annotations

import numpy as np

from .base import KnnParams


def train_knn(X: np.ndarray, y: np.ndarray, hp: KnnParams) -> dict:
    return {"X": X.copy(), "y": y.copy(), "k": int(hp.k)}


def predict_knn(params: dict, X: np.ndarray) -> np.ndarray:
    train_x = np.asarray(params["X"], dtype=float)
    train_y = np.asarray(params["y"], dtype=float)
    k = min(int(params["k"]), train_x.shape[0])
    X = np.atleast_2d(np.asarray(X, dtype=float))
    # ||q - x||^2 expanded; the q^2 term is rank-constant and omitted
    d2 = (train_x ** 2).sum(axis=1)[None, :] - 2.0 * X @ train_x.T
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        nearest = np.argsort(d2[i], kind="stable")[:k]
        out[i] = train_y[nearest].mean()
    return out
