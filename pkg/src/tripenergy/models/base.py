"""Shared model plumbing: the trained-model container, hyperparameter
defaults, input validation, and min-max scaling for the scale-sensitive
learners."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any

import numpy as np


class ModelError(ValueError):
    pass


class EmptyDataset(ModelError):
    pass


class NonFiniteInput(ModelError):
    pass


class CorruptModelFile(ModelError):
    pass


class VersionMismatch(ModelError):
    pass


@dataclass
class TrainedModel:
    """A fitted regressor of any kind, ready to predict or serialize.

    `params` holds the kind-specific learned state (numpy arrays inside);
    treat instances as immutable values and share them freely.
    """

    kind: str
    params: dict
    hyperparams: dict
    seed: int
    n_features: int
    schema_fingerprint: str = ""


@dataclass(frozen=True)
class LrParams:
    ridge_lambda: float = 0.0


@dataclass(frozen=True)
class SvrParams:
    epsilon: float = 0.1
    c: float = 50.0
    epochs: int = 2000
    learning_rate: float = 0.5


@dataclass(frozen=True)
class KnnParams:
    k: int = 5


@dataclass(frozen=True)
class DtParams:
    max_depth: int | None = None  # None = grow until pure
    min_samples_leaf: int = 1


@dataclass(frozen=True)
class RfParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    feature_subsample: float = 1.0 / 3.0  # fraction of features tried per split


@dataclass(frozen=True)
class GbParams:
    n_trees: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_samples_leaf: int = 1


@dataclass(frozen=True)
class MlpParams:
    hidden: tuple[int, ...] = (64, 32)
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden):
            raise ModelError("hidden layer sizes must be >= 1")


HYPERPARAM_TYPES = {
    "lr": LrParams, "svr": SvrParams, "knn": KnnParams, "dt": DtParams,
    "rf": RfParams, "gb": GbParams, "mlp": MlpParams,
}


def resolve_hyperparams(kind: str, hp: Any = None):
    """Accept None (defaults), a dict of overrides, or a ready instance."""
    cls = HYPERPARAM_TYPES[kind]
    if hp is None:
        return cls()
    if isinstance(hp, cls):
        return hp
    if isinstance(hp, dict):
        known = {f.name for f in fields(cls)}
        unknown = set(hp) - known
        if unknown:
            raise ModelError(f"unknown {kind} hyperparameters: {sorted(unknown)}")
        return replace(cls(), **hp)
    raise ModelError(f"cannot interpret hyperparameters {hp!r} for kind {kind!r}")


def validate_training_inputs(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ModelError("training matrix must be 2-dimensional")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise EmptyDataset("training matrix is empty")
    if y.shape != (X.shape[0],):
        raise ModelError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInput("training data contains NaN or infinity")
    return X, y


def fit_minmax(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column min and range; constant columns get range 1 (map to 0)."""
    xmin = X.min(axis=0)
    xrange = X.max(axis=0) - xmin
    xrange = np.where(xrange == 0.0, 1.0, xrange)
    return xmin, xrange


def apply_minmax(X: np.ndarray, xmin: np.ndarray, xrange: np.ndarray) -> np.ndarray:
    return (X - xmin) / xrange
