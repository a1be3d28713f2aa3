"""Optional, non-gating reproduction on externally prepared real data.

Point TRIPENERGY_DATASET at a directory containing `ebike_records.jsonl`
and/or `escooter_records.jsonl` (one labelled trip record per line, the
same JSON shape `tripenergy label` emits). For each vehicle present, the
best data-driven model must land at least 50 % below the physics baseline's
MAE. Skipped entirely when the variable is unset.
"""

import os
from pathlib import Path

import pytest

from tripenergy import models
from tripenergy.evaluation import SplitSpec, run_experiment
from tripenergy.features import read_records_jsonl

DATASET_DIR = os.environ.get("TRIPENERGY_DATASET")

pytestmark = pytest.mark.skipif(
    DATASET_DIR is None,
    reason="set TRIPENERGY_DATASET to a directory of labelled record files",
)


@pytest.mark.parametrize("vehicle", ["ebike", "escooter"])
def test_data_driven_models_halve_the_physics_error(vehicle):
    path = Path(DATASET_DIR) / f"{vehicle}_records.jsonl"
    if not path.exists():
        pytest.skip(f"{path} not provided")
    records = read_records_jsonl(path)
    if len(records) < 10:
        pytest.skip("too few records to split")
    column = run_experiment(records, models.MODEL_KINDS, SplitSpec(seed=0),
                            include_rider=True)
    best_kind = min((k for k in column if k != "physics"), key=column.get)
    best = column[best_kind]
    physics = column["physics"]
    print(f"{vehicle}: physics {physics:.2f} Wh/km, best {best_kind} "
          f"{best:.2f} Wh/km ({100.0 * (physics - best) / physics:.1f}% better)")
    assert best <= 0.5 * physics
