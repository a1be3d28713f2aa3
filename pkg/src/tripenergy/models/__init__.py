"""From-scratch regression model zoo with one train/predict/serialize contract.

Seven kinds share the interface: ridge linear regression (lr), linear
epsilon-insensitive SVR (svr), k-nearest neighbours (knn), a CART decision
tree (dt), a bootstrap random forest (rf), gradient-boosted trees (gb), and
a ReLU multilayer perceptron trained with Adam (mlp). Training is
deterministic given (data, hyperparameters, seed); models round-trip
through versioned JSON files bit-identically.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ..features import SchemaMismatch
from . import linear, mlp as mlp_mod, neighbors, trees
from .base import (
    CorruptModelFile,
    DtParams,
    EmptyDataset,
    GbParams,
    HYPERPARAM_TYPES,
    KnnParams,
    LrParams,
    MlpParams,
    ModelError,
    NonFiniteInput,
    RfParams,
    SvrParams,
    TrainedModel,
    VersionMismatch,
    resolve_hyperparams,
    validate_training_inputs,
)
from .mlp import get_flat_weights, set_flat_weights

MODEL_KINDS = ("lr", "svr", "knn", "dt", "rf", "gb", "mlp")
MODEL_FORMAT_VERSION = 1

__all__ = [
    "MODEL_KINDS", "MODEL_FORMAT_VERSION", "TrainedModel",
    "LrParams", "SvrParams", "KnnParams", "DtParams", "RfParams",
    "GbParams", "MlpParams", "HYPERPARAM_TYPES", "resolve_hyperparams",
    "ModelError", "EmptyDataset", "NonFiniteInput", "CorruptModelFile",
    "VersionMismatch", "SchemaMismatch",
    "train", "predict", "mlp_gradient", "save_model", "load_model",
    "get_flat_weights", "set_flat_weights",
]


def train(kind: str, X, y, hp=None, seed: int = 0, schema_fingerprint: str = "",
          X_val=None, y_val=None) -> TrainedModel:
    """Fit one model kind. Deterministic for fixed (data, hp, seed).

    The validation pair is consulted only by the MLP (best-epoch
    checkpointing); the other kinds ignore it.
    """
    if kind not in MODEL_KINDS:
        raise ModelError(f"unknown model kind {kind!r}")
    X, y = validate_training_inputs(X, y)
    hp = resolve_hyperparams(kind, hp)

    if kind == "lr":
        params = linear.train_lr(X, y, hp)
    elif kind == "svr":
        params = linear.train_svr(X, y, hp)
    elif kind == "knn":
        params = neighbors.train_knn(X, y, hp)
    elif kind == "dt":
        params = trees.train_dt(X, y, hp)
    elif kind == "rf":
        params = trees.train_rf(X, y, hp, seed)
    elif kind == "gb":
        params = trees.train_gb(X, y, hp)
    else:
        params = mlp_mod.train_mlp(X, y, hp, seed, X_val=X_val, y_val=y_val)

    return TrainedModel(kind=kind, params=params,
                        hyperparams=dataclasses.asdict(hp), seed=seed,
                        n_features=X.shape[1],
                        schema_fingerprint=schema_fingerprint)


def predict(model: TrainedModel, X, schema_fingerprint: str | None = None):
    """Predict Wh/km for one feature vector or a matrix of them.

    Returns a scalar for 1-D input, a vector for 2-D input. Rejects inputs
    whose width or declared schema fingerprint does not match the model.
    """
    if schema_fingerprint is not None and model.schema_fingerprint \
            and schema_fingerprint != model.schema_fingerprint:
        raise SchemaMismatch(
            f"feature schema {schema_fingerprint} does not match the model's "
            f"{model.schema_fingerprint}")
    arr = np.asarray(X, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.n_features:
        raise SchemaMismatch(
            f"feature vector has {arr.shape[1]} columns, model expects "
            f"{model.n_features}")

    if model.kind == "lr":
        out = linear.predict_lr(model.params, arr)
    elif model.kind == "svr":
        out = linear.predict_svr(model.params, arr)
    elif model.kind == "knn":
        out = neighbors.predict_knn(model.params, arr)
    elif model.kind == "dt":
        out = trees.predict_dt(model.params, arr)
    elif model.kind == "rf":
        out = trees.predict_rf(model.params, arr)
    elif model.kind == "gb":
        out = trees.predict_gb(model.params, arr)
    elif model.kind == "mlp":
        out = mlp_mod.predict_mlp(model.params, arr)
    else:
        raise ModelError(f"unknown model kind {model.kind!r}")
    return float(out[0]) if single else out


def mlp_gradient(model: TrainedModel, X, y) -> np.ndarray:
    """Analytic MSE gradient of an mlp model on a batch, as one flat vector."""
    if model.kind != "mlp":
        raise ModelError("gradients are defined for mlp models only")
    return mlp_mod.mlp_gradient(model.params, X, y)


# --- serialization ---

def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.tolist()}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def _from_jsonable(obj):
    if isinstance(obj, dict):
        if set(obj.keys()) == {"__array__"}:
            return np.asarray(obj["__array__"])
        return {k: _from_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_from_jsonable(v) for v in obj]
    return obj


def save_model(model: TrainedModel, path: str | Path) -> None:
    """Write the versioned JSON model file atomically (temp + rename)."""
    path = Path(path)
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "schema_fingerprint": model.schema_fingerprint,
        "hyperparams": _to_jsonable(model.hyperparams),
        "seed": model.seed,
        "n_features": model.n_features,
        "parameters": _to_jsonable(model.params),
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: str | Path) -> TrainedModel:
    try:
        payload = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise CorruptModelFile(f"cannot parse model file {path}: {err}") from None
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CorruptModelFile(f"{path} is not a model file")
    if payload["format_version"] != MODEL_FORMAT_VERSION:
        raise VersionMismatch(
            f"model format {payload['format_version']} unsupported "
            f"(expected {MODEL_FORMAT_VERSION})")
    try:
        hyperparams = payload["hyperparams"]
        if "hidden" in hyperparams:
            hyperparams["hidden"] = tuple(hyperparams["hidden"])
        return TrainedModel(
            kind=payload["kind"],
            params=_from_jsonable(payload["parameters"]),
            hyperparams=hyperparams,
            seed=payload["seed"],
            n_features=payload["n_features"],
            schema_fingerprint=payload["schema_fingerprint"],
        )
    except KeyError as err:
        raise CorruptModelFile(f"model file {path} lacks field {err}") from None
