"""Splitting, MAE, and the experiment grid."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tripenergy.evaluation import (
    EmptyInput,
    EvalReport,
    LengthMismatch,
    SplitSpec,
    TooFewRows,
    mae,
    run_experiment,
    run_grid,
    split,
)
from tripenergy.features import build_dataset
from tripenergy.rng import make_rng

from conftest import make_benchmark_records


class TestSplit:
    def test_exact_ratio(self):
        train, test, val = split(100, SplitSpec(seed=1))
        assert (len(train), len(test), len(val)) == (80, 10, 10)

    def test_remainder_goes_to_train(self):
        train, test, val = split(103, SplitSpec(seed=1))
        assert (len(train), len(test), len(val)) == (83, 10, 10)

    def test_deterministic(self):
        a = split(57, SplitSpec(seed=9))
        b = split(57, SplitSpec(seed=9))
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_seed_changes_partition(self):
        a, _, _ = split(57, SplitSpec(seed=1))
        b, _, _ = split(57, SplitSpec(seed=2))
        assert not np.array_equal(a, b)

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            split(9, SplitSpec())

    @given(st.integers(10, 500), st.integers(0, 2 ** 31))
    @settings(max_examples=60)
    def test_disjoint_and_covering(self, n, seed):
        train, test, val = split(n, SplitSpec(seed=seed))
        merged = np.concatenate([train, test, val])
        assert len(merged) == n
        assert len(np.unique(merged)) == n
        assert len(test) == n // 10
        assert len(val) == n // 10

    def test_ratio_validation(self):
        with pytest.raises(ValueError):
            SplitSpec(ratios=(0.5, 0.2, 0.2))


class TestMae:
    def test_hand_arithmetic(self):
        assert mae([1.0, 2.0, 3.0], [1.0, 3.0, 5.0]) == 1.0

    def test_perfect_predictions(self):
        assert mae([2.0, 4.0], [2.0, 4.0]) == 0.0

    def test_single_pair_at_table_magnitudes(self):
        assert mae([4.47], [29.39]) == pytest.approx(24.92)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            mae([1.0], [1.0, 2.0])

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            mae([], [])

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=20),
           st.floats(-10, 10))
    def test_symmetric_and_shift_invariant(self, values, c):
        x = np.asarray(values)
        y = x[::-1].copy()
        assert mae(x, y) == pytest.approx(mae(y, x), rel=1e-12, abs=1e-12)
        assert mae(x + c, y + c) == pytest.approx(mae(x, y), rel=1e-9, abs=1e-9)


class TestRunExperiment:
    def test_constant_labels_fit_exactly(self):
        records = make_benchmark_records(120, seed=3, noise_sd=0.0)
        from dataclasses import replace
        records = [replace(r, label_wh_per_km=7.0) for r in records]
        column = run_experiment(records, ("lr", "knn", "dt", "gb", "svr"),
                                SplitSpec(seed=4), include_rider=True)
        for kind in ("lr", "knn", "dt", "gb", "svr"):
            assert column[kind] == pytest.approx(0.0, abs=1e-9)
        mlp_col = run_experiment(records, ("mlp",), SplitSpec(seed=4),
                                 include_rider=True)
        assert mlp_col["mlp"] < 0.05  # iterative fit approaches the constant

    def test_linear_labels_recovered_by_lr(self):
        records = make_benchmark_records(60, seed=5, noise_sd=0.0)
        from dataclasses import replace
        records = [replace(r, label_wh_per_km=2.0 * r.avg_speed_kmh + 0.5)
                   for r in records]
        column = run_experiment(records, ("lr",), SplitSpec(seed=6),
                                include_rider=True)
        assert column["lr"] < 1e-8

    def test_physics_only_in_with_rider_column(self):
        records = make_benchmark_records(40, seed=7)
        with_rider = run_experiment(records, ("lr",), SplitSpec(seed=7),
                                    include_rider=True)
        without = run_experiment(records, ("lr",), SplitSpec(seed=7),
                                 include_rider=False)
        assert "physics" in with_rider
        assert "physics" not in without

    def test_ablation_leaves_labels_and_splits_alone(self):
        records = make_benchmark_records(50, seed=8)
        m_with, y_with, s_with = build_dataset(records, include_rider=True)
        m_without, y_without, s_without = build_dataset(records,
                                                        include_rider=False)
        assert np.array_equal(y_with, y_without)
        keep = [s_with.feature_names.index(n) for n in s_without.feature_names]
        assert np.array_equal(m_with[:, keep], m_without)
        # split depends only on (n_rows, seed), not on the rider flag
        assert all(np.array_equal(a, b)
                   for a, b in zip(split(50, SplitSpec(seed=8)),
                                   split(50, SplitSpec(seed=8))))


class TestReport:
    def make_report(self):
        report = EvalReport()
        report.set("ebike", "physics", True, 29.39)
        report.set("ebike", "mlp", True, 4.47)
        report.set("ebike", "mlp", False, 4.62)
        report.set("ebike", "lr", True, 4.68)
        report.set("ebike", "lr", False, 4.84)
        return report

    def test_json_round_trip(self):
        report = self.make_report()
        clone = EvalReport.from_json_obj(report.to_json_obj())
        assert clone.cells == report.cells

    def test_text_layout(self):
        text = self.make_report().to_text()
        assert "Mathematical model" in text
        assert "with rider features" in text
        assert "without rider features" in text
        # the baseline has no without-rider cell
        physics_line = next(l for l in text.splitlines()
                            if l.startswith("Mathematical model"))
        assert physics_line.rstrip().endswith("--")
        assert "improves on the mathematical model" in text

    def test_improvement_percentage(self):
        text = self.make_report().to_text()
        # (29.39 - 4.47) / 29.39 = 84.8 %
        assert "84.8%" in text

    def test_grid_runs_end_to_end(self):
        records = make_benchmark_records(40, seed=12)
        report = run_grid(records, ("lr", "dt"), SplitSpec(seed=12))
        assert report.get("escooter", "physics", True) is not None
        assert report.get("escooter", "physics", False) is None
        for kind in ("lr", "dt"):
            assert report.get("escooter", kind, True) >= 0.0
            assert report.get("escooter", kind, False) >= 0.0
