"""Dataset splitting, MAE scoring, and the rider-feature ablation grid.

Rows are shuffled once per seed and carved into train/test/validation
partitions (floor-sized test and validation, remainder to train). Each
model kind trains on the train split and is scored by test-split MAE; the
validation split exists solely for MLP epoch selection. The physics
baseline joins the comparison only in the with-rider configuration because
it cannot run without a mass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import models
from .features import TripRecord, build_dataset
from .physics import PhysicsParams, physics_predict
from .rng import make_rng

PHYSICS_APPROACH = "physics"
APPROACH_LABELS = {
    PHYSICS_APPROACH: "Mathematical model",
    "lr": "LR", "svr": "SVR", "knn": "KNN", "dt": "DT",
    "rf": "RF", "gb": "GB", "mlp": "MLP",
}
_APPROACH_ORDER = (PHYSICS_APPROACH, "lr", "svr", "dt", "rf", "gb", "knn", "mlp")


class TooFewRows(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    """Partition ratios (train, test, val) and the shuffle seed."""

    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise ValueError("ratios must be three non-negative numbers")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {sum(self.ratios)}")


def split(n_rows: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint, covering (train, test, val) index arrays.

    Test and validation sizes are floors of their ratios; remainder rows go
    to train. Deterministic in (n_rows, seed).
    """
    if n_rows < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {n_rows}")
    _, r_test, r_val = spec.ratios
    # epsilon guards against 0.1 * n landing just under an integer
    n_test = int(n_rows * r_test + 1e-9)
    n_val = int(n_rows * r_val + 1e-9)
    n_train = n_rows - n_test - n_val
    perm = make_rng(spec.seed, stream=0).permutation(n_rows)
    train = np.sort(perm[:n_train])
    test = np.sort(perm[n_train:n_train + n_test])
    val = np.sort(perm[n_train + n_test:])
    return train, test, val


def mae(predictions, targets) -> float:
    """Mean absolute error in Wh/km."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} predictions vs {t.shape} targets")
    if p.size == 0:
        raise EmptyInput("MAE of zero pairs is undefined")
    return float(np.mean(np.abs(p - t)))


@dataclass
class EvalReport:
    """MAE grid: (vehicle kind, approach, rider-features flag) -> Wh/km."""

    cells: dict = field(default_factory=dict)

    def set(self, vehicle: str, approach: str, rider_features: bool, value: float):
        self.cells[(vehicle, approach, rider_features)] = value

    def get(self, vehicle: str, approach: str, rider_features: bool):
        return self.cells.get((vehicle, approach, rider_features))

    def vehicles(self) -> list[str]:
        return sorted({v for v, _, _ in self.cells})

    def to_json_obj(self) -> list[dict]:
        return [
            {"vehicle": v, "approach": a, "rider_features": r,
             "mae_wh_per_km": self.cells[(v, a, r)]}
            for v, a, r in sorted(self.cells, key=lambda k: (k[0], _order(k[1]), not k[2]))
        ]

    @classmethod
    def from_json_obj(cls, rows: list[dict]) -> "EvalReport":
        report = cls()
        for row in rows:
            report.set(row["vehicle"], row["approach"], row["rider_features"],
                       row["mae_wh_per_km"])
        return report

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_obj(), indent=2) + "\n")

    def to_text(self) -> str:
        lines = []
        for vehicle in self.vehicles():
            lines.append(f"Performance (MAE, Wh/km) -- {vehicle}")
            lines.append(f"{'Approach':<22}{'with rider features':>22}"
                         f"{'without rider features':>26}")
            approaches = sorted(
                {a for v, a, _ in self.cells if v == vehicle}, key=_order)
            for approach in approaches:
                w = self.get(vehicle, approach, True)
                wo = self.get(vehicle, approach, False)
                lines.append(
                    f"{APPROACH_LABELS.get(approach, approach):<22}"
                    f"{_fmt(w):>22}{_fmt(wo):>26}")
            improvement = self._improvement_line(vehicle)
            if improvement:
                lines.append("")
                lines.append(improvement)
            lines.append("")
        return "\n".join(lines).rstrip() + "\n"

    def _improvement_line(self, vehicle: str) -> str | None:
        physics = self.get(vehicle, PHYSICS_APPROACH, True)
        learned = {a: m for (v, a, r), m in self.cells.items()
                   if v == vehicle and r and a != PHYSICS_APPROACH}
        if physics is None or physics <= 0 or not learned:
            return None
        best = min(learned, key=learned.get)
        gain = 100.0 * (physics - learned[best]) / physics
        return (f"Best data-driven model ({APPROACH_LABELS.get(best, best)}) "
                f"improves on the mathematical model by {gain:.1f}% "
                f"(with rider features).")


def _order(approach: str) -> int:
    try:
        return _APPROACH_ORDER.index(approach)
    except ValueError:
        return len(_APPROACH_ORDER)


def _fmt(value) -> str:
    return "--" if value is None else f"{value:.2f}"


def run_experiment(records: Sequence[TripRecord], model_kinds: Sequence[str],
                   spec: SplitSpec, include_rider: bool,
                   hyperparams: dict | None = None,
                   physics_params: PhysicsParams | None = None,
                   device_mass_kg: float | None = None,
                   include_physics: bool | None = None) -> dict[str, float]:
    """Train every kind on one rider-flag configuration; return test MAEs.

    The returned mapping is one column of the results table. The physics
    baseline is evaluated on the same test rows (with-rider runs only,
    since it cannot drop mass). `hyperparams` maps kind -> overrides.
    """
    matrix, labels, schema = build_dataset(records, include_rider)
    train_idx, test_idx, val_idx = split(len(records), spec)
    if include_physics is None:
        include_physics = include_rider

    column: dict[str, float] = {}
    if include_physics:
        baseline = [physics_predict(records[i],
                                    physics_params or PhysicsParams(),
                                    device_mass_kg=device_mass_kg)
                    for i in test_idx]
        column[PHYSICS_APPROACH] = mae(baseline, labels[test_idx])

    overrides = hyperparams or {}
    for kind in model_kinds:
        model = models.train(
            kind, matrix[train_idx], labels[train_idx],
            hp=overrides.get(kind), seed=spec.seed,
            schema_fingerprint=schema.fingerprint(),
            X_val=matrix[val_idx] if kind == "mlp" else None,
            y_val=labels[val_idx] if kind == "mlp" else None,
        )
        preds = models.predict(model, matrix[test_idx])
        column[kind] = mae(preds, labels[test_idx])
    return column


def run_grid(records: Sequence[TripRecord], model_kinds: Sequence[str],
             spec: SplitSpec, hyperparams: dict | None = None,
             physics_params: PhysicsParams | None = None,
             device_mass_kg: float | None = None) -> EvalReport:
    """Full with/without-rider-features comparison for one vehicle kind."""
    report = EvalReport()
    vehicle = records[0].kind
    for include_rider in (True, False):
        column = run_experiment(records, model_kinds, spec, include_rider,
                                hyperparams=hyperparams,
                                physics_params=physics_params,
                                device_mass_kg=device_mass_kg)
        for approach, value in column.items():
            report.set(vehicle, approach, include_rider, value)
    return report
