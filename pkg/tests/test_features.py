"""Wind/weather encoding, schema handling, and dataset assembly."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tripenergy.features import (
    FeatureSchema,
    MissingFeature,
    MixedKinds,
    TripRecord,
    UnknownDirection,
    UnknownToken,
    build_dataset,
    build_schema,
    encode_weather,
    encode_wind,
    read_dataset_csv,
    read_records_jsonl,
    record_from_trace,
    write_dataset_csv,
    write_records_jsonl,
)
from tripenergy.telemetry import COMPASS_ROSE
from tripenergy.tripmetrics import summarize

from conftest import make_benchmark_records, make_trace

SQ2 = math.sqrt(2.0) / 2.0


class TestEncodeWind:
    @pytest.mark.parametrize("token,expected", [
        ("E", (1.0, 0.0)),
        ("S", (0.0, -1.0)),
        ("N", (0.0, 1.0)),
        ("W", (-1.0, 0.0)),
        ("NE", (SQ2, SQ2)),
        ("SW", (-SQ2, -SQ2)),
    ])
    def test_axis_definitions(self, token, expected):
        we, ns = encode_wind(token)
        assert we == pytest.approx(expected[0], abs=1e-12)
        assert ns == pytest.approx(expected[1], abs=1e-12)

    def test_calm_is_zero_vector(self):
        assert encode_wind("CALM") == (0.0, 0.0)
        assert encode_wind("calm") == (0.0, 0.0)

    def test_unknown_token(self):
        with pytest.raises(UnknownDirection):
            encode_wind("UP")

    @pytest.mark.parametrize("token", COMPASS_ROSE)
    def test_unit_norm(self, token):
        we, ns = encode_wind(token)
        assert we * we + ns * ns == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("i", range(8))
    def test_opposite_tokens_negate(self, i):
        we1, ns1 = encode_wind(COMPASS_ROSE[i])
        we2, ns2 = encode_wind(COMPASS_ROSE[i + 8])
        assert we1 == pytest.approx(-we2, abs=1e-12)
        assert ns1 == pytest.approx(-ns2, abs=1e-12)


class TestEncodeWeather:
    def schema_for(self, tokens):
        codes = {t: i for i, t in enumerate(sorted(tokens))}
        return FeatureSchema(kind="escooter", feature_names=("weather_code",),
                             weather_codes=codes, include_rider=False)

    def test_lexicographic_numbering(self):
        schema = self.schema_for({"Dry", "Wet", "Cloudy"})
        assert encode_weather("Cloudy", schema) == 0
        assert encode_weather("Dry", schema) == 1
        assert encode_weather("Wet", schema) == 2

    def test_deterministic(self):
        schema = self.schema_for({"Dry", "Wet"})
        assert encode_weather("Dry", schema) == encode_weather("Dry", schema)

    def test_unknown_token_strict(self):
        schema = self.schema_for({"Dry"})
        with pytest.raises(UnknownToken):
            encode_weather("Hail", schema)

    def test_unknown_token_reserved_code(self):
        schema = self.schema_for({"Dry"})
        assert encode_weather("Hail", schema, strict=False) == -1

    def test_corpus_order_independent(self):
        a = build_schema(make_benchmark_records(30, seed=1), include_rider=False)
        shuffled = list(reversed(make_benchmark_records(30, seed=1)))
        b = build_schema(shuffled, include_rider=False)
        assert a.weather_codes == b.weather_codes


def make_ebike_record(i=0, temperature=16.0, precipitation=None, rider=True):
    return TripRecord(
        kind="ebike", avg_speed_kmh=18.0 + i, avg_slope_pct=0.5,
        wind_speed_kmh=10.0, wind_we=0.0, wind_ns=-1.0, weather="Cloudy",
        label_wh_per_km=8.0 + 0.1 * i, distance_km=3.0, total_ascent_m=15.0,
        assist_level=0.6, temperature_c=temperature,
        precipitation_mm=precipitation,
        height_mid_cm=175.0 if rider else None,
        weight_mid_kg=75.0 if rider else None,
    )


class TestBuildDataset:
    def test_rider_columns_present_iff_flag(self):
        records = [make_ebike_record(i) for i in range(10)]
        with_x, with_y, with_schema = build_dataset(records, include_rider=True)
        without_x, without_y, without_schema = build_dataset(records,
                                                             include_rider=False)
        assert "height_mid_cm" in with_schema.feature_names
        assert "weight_mid_kg" in with_schema.feature_names
        assert with_x.shape[1] == without_x.shape[1] + 2
        assert set(without_schema.feature_names) | {"height_mid_cm", "weight_mid_kg"} \
            == set(with_schema.feature_names)
        # dropping rider features touches no other column
        keep = [with_schema.feature_names.index(n)
                for n in without_schema.feature_names]
        assert np.array_equal(with_x[:, keep], without_x)
        assert np.array_equal(with_y, without_y)

    def test_mixed_kinds_rejected(self):
        records = make_benchmark_records(3, seed=0) + [make_ebike_record()]
        with pytest.raises(MixedKinds):
            build_dataset(records, include_rider=False)

    def test_missing_rider_features(self):
        records = [make_ebike_record(rider=False)]
        with pytest.raises(MissingFeature):
            build_dataset(records, include_rider=True)

    def test_optional_column_uniform_presence(self):
        with_temp = [make_ebike_record(i) for i in range(3)]
        _, _, schema = build_dataset(with_temp, include_rider=True)
        assert "temperature_c" in schema.feature_names
        assert "precipitation_mm" not in schema.feature_names

        none_temp = [make_ebike_record(i, temperature=None) for i in range(3)]
        _, _, schema = build_dataset(none_temp, include_rider=True)
        assert "temperature_c" not in schema.feature_names

        mixed = [make_ebike_record(0), make_ebike_record(1, temperature=None)]
        with pytest.raises(MissingFeature):
            build_dataset(mixed, include_rider=True)

    def test_escooter_has_no_temperature_column(self):
        records = make_benchmark_records(5, seed=3)
        _, _, schema = build_dataset(records, include_rider=True)
        assert "temperature_c" not in schema.feature_names
        assert schema.feature_names[:3] == ("avg_speed_kmh", "altitude_diff_m",
                                            "avg_slope_pct")

    @given(st.randoms(use_true_random=False))
    def test_permutation_equivariant(self, rnd):
        records = make_benchmark_records(12, seed=5)
        matrix, labels, schema = build_dataset(records, include_rider=True)
        perm = list(range(len(records)))
        rnd.shuffle(perm)
        shuffled = [records[i] for i in perm]
        matrix2, labels2, schema2 = build_dataset(shuffled, include_rider=True)
        assert schema2 == schema
        assert np.array_equal(matrix2, matrix[perm])
        assert np.array_equal(labels2, labels[perm])

    def test_reencoding_against_existing_schema(self):
        records = make_benchmark_records(10, seed=6)
        _, _, schema = build_dataset(records, include_rider=True)
        more = make_benchmark_records(4, seed=7)
        matrix, _, _ = build_dataset(more, include_rider=True, schema=schema)
        assert matrix.shape == (4, len(schema.feature_names))


class TestSchema:
    def test_fingerprint_stable_and_sensitive(self):
        records = make_benchmark_records(8, seed=2)
        s1 = build_schema(records, include_rider=True)
        s2 = build_schema(records, include_rider=True)
        s3 = build_schema(records, include_rider=False)
        assert s1.fingerprint() == s2.fingerprint()
        assert s1.fingerprint() != s3.fingerprint()

    def test_json_round_trip(self):
        schema = build_schema(make_benchmark_records(8, seed=2), include_rider=True)
        assert FeatureSchema.from_json(schema.to_json()) == schema

    def test_bijective_codes_enforced(self):
        with pytest.raises(Exception):
            FeatureSchema(kind="ebike", feature_names=("a",),
                          weather_codes={"Dry": 0, "Wet": 0}, include_rider=False)


class TestRecordPersistence:
    def test_json_round_trip(self):
        record = make_ebike_record()
        assert TripRecord.from_json(record.to_json()) == record

    def test_jsonl_round_trip(self, tmp_path):
        records = make_benchmark_records(6, seed=9)
        path = tmp_path / "records.jsonl"
        write_records_jsonl(records, path)
        assert read_records_jsonl(path) == records

    def test_dataset_csv_round_trip(self, tmp_path):
        records = make_benchmark_records(6, seed=10)
        matrix, labels, schema = build_dataset(records, include_rider=True)
        path = tmp_path / "dataset.csv"
        write_dataset_csv(matrix, labels, schema, path)
        matrix2, labels2, names = read_dataset_csv(path)
        assert names == list(schema.feature_names)
        assert np.array_equal(matrix2, matrix)
        assert np.array_equal(labels2, labels)

    def test_label_invariant(self):
        with pytest.raises(Exception):
            make_benchmark_records(1, seed=0)[0].__class__(
                **{**make_ebike_record().to_json(), "label_wh_per_km": -1.0})


class TestRecordFromTrace:
    def test_scooter_aggregation(self):
        trace = make_trace(kind="escooter", n=8, soc_start=96.0)
        summary = summarize(trace, smoothing_window=1)
        record = record_from_trace(trace, summary, label_wh_per_km=11.15)
        assert record.kind == "escooter"
        assert record.label_wh_per_km == 11.15
        assert record.avg_speed_kmh == summary.avg_speed_kmh
        assert record.altitude_diff_m == summary.altitude_diff_m
        assert record.distance_km is None
        assert (record.wind_we, record.wind_ns) == encode_wind("E")
        assert record.weather == "Dry"

    def test_ebike_fields_and_rider(self, ebike_trace):
        summary = summarize(ebike_trace, smoothing_window=1)
        record = record_from_trace(ebike_trace, summary, label_wh_per_km=9.0)
        assert record.distance_km == summary.distance_km
        assert record.total_ascent_m == summary.total_ascent_m
        assert record.assist_level == 0.6
        assert record.height_mid_cm == 175.0
        assert record.weight_mid_kg == 75.0
        assert record.altitude_diff_m is None

    def test_token_mode_first_seen_wins_ties(self):
        from dataclasses import replace
        trace = make_trace(kind="ebike", n=4)
        samples = list(trace.samples)
        samples[0] = replace(samples[0], weather="Wet")
        samples[1] = replace(samples[1], weather="Dry")
        samples[2] = replace(samples[2], weather="Wet")
        samples[3] = replace(samples[3], weather="Dry")
        trace = trace.__class__(kind="ebike", samples=tuple(samples))
        summary = summarize(trace, smoothing_window=1)
        record = record_from_trace(trace, summary, 5.0)
        assert record.weather == "Wet"
