"""Fully-connected ReLU network trained with Adam on mean-squared error.

Inputs are min-max scaled with statistics from the training split. Hidden
layers use He-initialized weights; the output bias starts at the label mean
so early epochs are not spent chasing the label offset. When a validation
split is supplied, the weights from the best-validation epoch are kept
(epoch selection is the validation split's only job).

`mlp_gradient` exposes the analytic backpropagation gradient as one flat
vector so it can be checked against finite differences.
"""

from __future__ import annotations

import numpy as np

from ..rng import make_rng
from .base import MlpParams, apply_minmax, fit_minmax


def _init_layers(dims: list[int], rng: np.random.Generator, y_mean: float):
    layers = []
    for i in range(len(dims) - 1):
        w = rng.normal(0.0, np.sqrt(2.0 / dims[i]), size=(dims[i], dims[i + 1]))
        b = np.zeros(dims[i + 1])
        layers.append([w, b])
    layers[-1][1] = np.array([y_mean])
    return layers


def _forward(layers, Xs: np.ndarray) -> list[np.ndarray]:
    """Activations per layer; the last entry is the (n, 1) linear output."""
    acts = [Xs]
    a = Xs
    for i, (w, b) in enumerate(layers):
        z = a @ w + b
        a = np.maximum(z, 0.0) if i < len(layers) - 1 else z
        acts.append(a)
    return acts


def _gradients(layers, Xs: np.ndarray, y: np.ndarray):
    """Per-layer (dW, db) of mean((pred - y)^2) over the batch."""
    acts = _forward(layers, Xs)
    n = Xs.shape[0]
    pred = acts[-1][:, 0]
    delta = (2.0 / n) * (pred - y)[:, None]
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        a_prev = acts[i]
        grads[i] = (a_prev.T @ delta, delta.sum(axis=0))
        if i > 0:
            # ReLU subgradient: zero where the unit was inactive
            delta = (delta @ layers[i][0].T) * (acts[i] > 0.0)
    return grads


def train_mlp(X: np.ndarray, y: np.ndarray, hp: MlpParams, seed: int,
              X_val: np.ndarray | None = None,
              y_val: np.ndarray | None = None) -> dict:
    xmin, xrange = fit_minmax(X)
    Xs = apply_minmax(X, xmin, xrange)
    n, d = Xs.shape
    dims = [d, *hp.hidden, 1]
    layers = _init_layers(dims, make_rng(seed, stream=0), float(y.mean()))
    rng_shuffle = make_rng(seed, stream=1)

    adam_m = [[np.zeros_like(w), np.zeros_like(b)] for w, b in layers]
    adam_v = [[np.zeros_like(w), np.zeros_like(b)] for w, b in layers]
    step = 0

    if X_val is not None:
        Xv = apply_minmax(np.asarray(X_val, dtype=float), xmin, xrange)
        yv = np.asarray(y_val, dtype=float)
    best_val = np.inf
    best_layers = None
    best_epoch = -1

    for epoch in range(hp.epochs):
        perm = rng_shuffle.permutation(n)
        for start in range(0, n, hp.batch_size):
            batch = perm[start:start + hp.batch_size]
            grads = _gradients(layers, Xs[batch], y[batch])
            step += 1
            corr1 = 1.0 - hp.beta1 ** step
            corr2 = 1.0 - hp.beta2 ** step
            for li in range(len(layers)):
                for pi in range(2):
                    g = grads[li][pi]
                    adam_m[li][pi] = hp.beta1 * adam_m[li][pi] + (1.0 - hp.beta1) * g
                    adam_v[li][pi] = hp.beta2 * adam_v[li][pi] + (1.0 - hp.beta2) * g * g
                    m_hat = adam_m[li][pi] / corr1
                    v_hat = adam_v[li][pi] / corr2
                    layers[li][pi] = layers[li][pi] - hp.learning_rate * m_hat / (
                        np.sqrt(v_hat) + hp.adam_eps)
        if X_val is not None and len(yv):
            val_pred = _forward(layers, Xv)[-1][:, 0]
            val_mse = float(np.mean((val_pred - yv) ** 2))
            if val_mse < best_val:
                best_val = val_mse
                best_layers = [[w.copy(), b.copy()] for w, b in layers]
                best_epoch = epoch

    if best_layers is not None:
        layers = best_layers
    return {"layers": layers, "xmin": xmin, "xrange": xrange,
            "best_epoch": best_epoch}


def predict_mlp(params: dict, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xs = apply_minmax(X, np.asarray(params["xmin"], dtype=float),
                      np.asarray(params["xrange"], dtype=float))
    return _forward(params["layers"], Xs)[-1][:, 0]


def _flatten(tensors) -> np.ndarray:
    return np.concatenate([t.ravel() for pair in tensors for t in pair])


def get_flat_weights(params: dict) -> np.ndarray:
    return _flatten(params["layers"])


def set_flat_weights(params: dict, flat: np.ndarray) -> dict:
    """New params dict with weights replaced by the flat vector's values."""
    flat = np.asarray(flat, dtype=float)
    layers = []
    offset = 0
    for w, b in params["layers"]:
        new_pair = []
        for t in (w, b):
            size = t.size
            new_pair.append(flat[offset:offset + size].reshape(t.shape).copy())
            offset += size
        layers.append(new_pair)
    if offset != flat.size:
        raise ValueError(f"flat vector has {flat.size} entries, expected {offset}")
    out = dict(params)
    out["layers"] = layers
    return out


def mlp_gradient(params: dict, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Flat analytic gradient of the batch MSE w.r.t. all weights and biases."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("gradient needs a non-empty batch")
    y = np.asarray(y, dtype=float)
    Xs = apply_minmax(X, np.asarray(params["xmin"], dtype=float),
                      np.asarray(params["xrange"], dtype=float))
    return _flatten(_gradients(params["layers"], Xs, y))
