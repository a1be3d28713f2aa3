"""Linear regressors: ridge least squares and linear epsilon-insensitive SVR.

Ridge is solved in one shot by augmenting the design matrix with sqrt(lambda)
rows (the intercept stays unpenalized) and running a stable least-squares
factorization. The SVR minimizes

    0.5/C * ||w||^2 + mean_i max(0, |w.x_i + b - y_i| - epsilon)

by full-batch subgradient descent with a 1/sqrt(t) step schedule on
min-max-scaled inputs; full batches keep training deterministic.
"""

from __future__ import annotations

import math

import numpy as np

from .base import LrParams, SvrParams, apply_minmax, fit_minmax


def train_lr(X: np.ndarray, y: np.ndarray, hp: LrParams) -> dict:
    n, d = X.shape
    design = np.column_stack([X, np.ones(n)])
    target = y
    if hp.ridge_lambda > 0:
        penalty = np.column_stack([math.sqrt(hp.ridge_lambda) * np.eye(d), np.zeros(d)])
        design = np.vstack([design, penalty])
        target = np.concatenate([y, np.zeros(d)])
    beta, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    return {"coef": beta[:d], "intercept": float(beta[d])}


def predict_lr(params: dict, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return X @ np.asarray(params["coef"], dtype=float) + params["intercept"]


def train_svr(X: np.ndarray, y: np.ndarray, hp: SvrParams) -> dict:
    xmin, xrange = fit_minmax(X)
    Xs = apply_minmax(X, xmin, xrange)
    n, d = Xs.shape
    w = np.zeros(d)
    b = float(y.mean())  # start at the label mean; the loss is flat far away
    lam = 1.0 / hp.c
    for t in range(1, hp.epochs + 1):
        residual = Xs @ w + b - y
        active = np.abs(residual) > hp.epsilon
        s = np.sign(residual) * active
        grad_w = lam * w + (Xs.T @ s) / n
        grad_b = float(s.mean())
        step = hp.learning_rate / math.sqrt(t)
        w = w - step * grad_w
        b = b - step * grad_b
    return {"w": w, "b": b, "xmin": xmin, "xrange": xrange}


def predict_svr(params: dict, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xs = apply_minmax(X, np.asarray(params["xmin"], dtype=float),
                      np.asarray(params["xrange"], dtype=float))
    return Xs @ np.asarray(params["w"], dtype=float) + params["b"]
