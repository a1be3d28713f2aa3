"""Gaussian-copula synthetic trip-record generation.

Marginals are empirical (inverse-CDF via interpolated order statistics), so
every synthetic value stays inside the training column's range. Dependence
is captured by the correlation of the normal-scores transform and
reproduced by sampling a latent multivariate normal. Columns that hold
codes rather than measurements are snapped to the nearest observed value
after sampling so categorical validity survives the continuous path.

The quality score is a regression-test proxy combining marginal fidelity
(two-sample KS) and dependence fidelity (correlation-matrix drift); it is
not comparable to any external library's score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata

from .features import SchemaMismatch
from .rng import make_rng

_EIG_FLOOR = 1e-10


class DegenerateInput(ValueError):
    pass


@dataclass
class CopulaModel:
    columns: tuple[str, ...]
    marginals: list[np.ndarray]   # sorted training values per column
    correlation: np.ndarray       # latent correlation, PSD-repaired
    discrete: tuple[bool, ...]    # snap sampled values to observed ones


def _corr_zero_safe(Z: np.ndarray) -> np.ndarray:
    """Correlation matrix with zero-variance columns treated as uncorrelated."""
    d = Z.shape[1]
    std = Z.std(axis=0)
    corr = np.eye(d)
    live = std > 0
    if live.sum() >= 2:
        sub = np.corrcoef(Z[:, live], rowvar=False)
        corr[np.ix_(live, live)] = sub
    return corr


def nearest_psd(corr: np.ndarray, floor: float = _EIG_FLOOR) -> np.ndarray:
    """Clip negative eigenvalues and restore the unit diagonal."""
    vals, vecs = np.linalg.eigh(corr)
    if vals.min() >= floor:
        return corr
    vals = np.clip(vals, floor, None)
    repaired = (vecs * vals) @ vecs.T
    scale = np.sqrt(np.diag(repaired))
    repaired = repaired / np.outer(scale, scale)
    np.fill_diagonal(repaired, 1.0)
    return repaired


def fit_copula(matrix: np.ndarray, columns: Sequence[str] | None = None,
               discrete: Sequence[str] | None = None) -> CopulaModel:
    """Fit empirical marginals and the latent normal-scores correlation."""
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise DegenerateInput("expected a 2-D matrix")
    n, d = X.shape
    if n < 5:
        raise DegenerateInput(f"need at least 5 rows to fit a copula, got {n}")
    if not np.isfinite(X).all():
        raise DegenerateInput("matrix contains NaN or infinity")
    if columns is None:
        columns = tuple(f"col{i}" for i in range(d))
    else:
        columns = tuple(columns)
        if len(columns) != d:
            raise SchemaMismatch(f"{len(columns)} names for {d} columns")
    discrete_set = set(discrete or ())
    unknown = discrete_set - set(columns)
    if unknown:
        raise SchemaMismatch(f"discrete columns not in schema: {sorted(unknown)}")

    marginals = [np.sort(X[:, j]) for j in range(d)]
    # mid-rank normal scores; r/(n+1) keeps them strictly inside (0, 1)
    Z = np.column_stack([
        ndtri(rankdata(X[:, j], method="average") / (n + 1)) for j in range(d)
    ])
    corr = nearest_psd(_corr_zero_safe(Z))
    return CopulaModel(columns=columns, marginals=marginals, correlation=corr,
                       discrete=tuple(c in discrete_set for c in columns))


def _empirical_quantile(sorted_values: np.ndarray, u: np.ndarray) -> np.ndarray:
    n = sorted_values.size
    if n == 1:
        return np.full(u.shape, sorted_values[0])
    return np.interp(u, np.linspace(0.0, 1.0, n), sorted_values)


def _snap_to_observed(values: np.ndarray, observed: np.ndarray) -> np.ndarray:
    uniq = np.unique(observed)
    pos = np.searchsorted(uniq, values)
    pos = np.clip(pos, 1, uniq.size - 1) if uniq.size > 1 else np.zeros_like(pos)
    lo = uniq[np.maximum(pos - 1, 0)]
    hi = uniq[pos]
    return np.where(values - lo <= hi - values, lo, hi)


def sample(model: CopulaModel, n: int, seed: int) -> np.ndarray:
    """Draw n synthetic rows; deterministic under the seed."""
    if n < 1:
        raise ValueError("need n >= 1")
    d = len(model.columns)
    rng = make_rng(seed, stream=0)
    eps = rng.standard_normal((n, d))
    vals, vecs = np.linalg.eigh(model.correlation)
    transform = vecs * np.sqrt(np.clip(vals, 0.0, None))
    z = eps @ transform.T
    u = ndtr(z)
    out = np.empty((n, d))
    for j in range(d):
        col = _empirical_quantile(model.marginals[j], u[:, j])
        if model.discrete[j]:
            col = _snap_to_observed(col, model.marginals[j])
        out[:, j] = col
    return out


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (max ECDF gap)."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("KS statistic needs non-empty samples")
    grid = np.concatenate([a, b])
    ecdf_a = np.searchsorted(a, grid, side="right") / a.size
    ecdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(ecdf_a - ecdf_b).max())


def _offdiag_corr_gap(real: np.ndarray, synthetic: np.ndarray) -> float:
    d = real.shape[1]
    if d < 2:
        return 0.0
    cr = _corr_zero_safe(real)
    cs = _corr_zero_safe(synthetic)
    iu = np.triu_indices(d, k=1)
    return float(np.abs(cr[iu] - cs[iu]).mean())


def quality_score(real: np.ndarray, synthetic: np.ndarray) -> float:
    """Percent score in [0, 100]: 100 means identical marginals and correlations.

    score = 100 * (1 - 0.5 * (mean per-column KS + mean |corr difference|)),
    clamped below at 0.
    """
    real = np.asarray(real, dtype=float)
    synthetic = np.asarray(synthetic, dtype=float)
    if real.ndim != 2 or synthetic.ndim != 2 or real.shape[1] != synthetic.shape[1]:
        raise SchemaMismatch("real and synthetic matrices must share columns")
    ks_mean = float(np.mean([
        ks_statistic(real[:, j], synthetic[:, j]) for j in range(real.shape[1])
    ]))
    corr_gap = _offdiag_corr_gap(real, synthetic)
    return max(0.0, 100.0 * (1.0 - 0.5 * (ks_mean + corr_gap)))


# --- persistence ---

def copula_to_json(model: CopulaModel) -> dict:
    return {
        "columns": list(model.columns),
        "marginals": [m.tolist() for m in model.marginals],
        "correlation": model.correlation.tolist(),
        "discrete": list(model.discrete),
    }


def copula_from_json(obj: dict) -> CopulaModel:
    return CopulaModel(
        columns=tuple(obj["columns"]),
        marginals=[np.asarray(m, dtype=float) for m in obj["marginals"]],
        correlation=np.asarray(obj["correlation"], dtype=float),
        discrete=tuple(obj["discrete"]),
    )


def write_copula_json(model: CopulaModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(copula_to_json(model)) + "\n")


def read_copula_json(path: str | Path) -> CopulaModel:
    return copula_from_json(json.loads(Path(path).read_text()))
