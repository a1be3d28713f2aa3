"""Numeric feature encoding for summarized trip records.

Wind direction becomes a unit vector on (east, north) axes pointing where
the wind blows FROM (meteorological convention). Weather text becomes an
integer code from a corpus-driven dictionary: tokens are sorted
lexicographically and numbered from 0, so the encoding is independent of
record order. Rider height/weight ranges enter as midpoints and can be
ablated away without touching any other column.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .telemetry import CALM, COMPASS_ROSE, KINDS

LABEL_COLUMN = "label_wh_per_km"
UNKNOWN_WEATHER_CODE = -1

EBIKE_TRIP_FEATURES = ("distance_km", "avg_speed_kmh", "total_ascent_m",
                       "avg_slope_pct", "assist_level")
ESCOOTER_TRIP_FEATURES = ("avg_speed_kmh", "altitude_diff_m", "avg_slope_pct")
WEATHER_FEATURES = ("wind_speed_kmh", "wind_we", "wind_ns", "weather_code")
# Enrichment columns; included only when every record in the corpus has them.
OPTIONAL_EBIKE_FEATURES = ("precipitation_mm", "temperature_c")
RIDER_FEATURES = ("height_mid_cm", "weight_mid_kg")


class FeatureError(ValueError):
    """Base class for feature-encoding failures."""


class UnknownDirection(FeatureError):
    pass


class UnknownToken(FeatureError):
    pass


class MixedKinds(FeatureError):
    pass


class MissingFeature(FeatureError):
    pass


class SchemaMismatch(FeatureError):
    """Feature data does not match the schema it is used with."""


def encode_wind(direction: str) -> tuple[float, float]:
    """Unit (east, north) vector of the direction the wind comes from.

    "CALM" maps to the zero vector; anything outside the 16-point rose is
    an error rather than a silent NaN.
    """
    token = direction.strip().upper()
    if token == CALM:
        return (0.0, 0.0)
    try:
        step = COMPASS_ROSE.index(token)
    except ValueError:
        raise UnknownDirection(f"unknown wind direction {direction!r}") from None
    theta = math.radians(step * 22.5)  # clockwise from north
    return (math.sin(theta), math.cos(theta))


@dataclass(frozen=True)
class TripRecord:
    """One summarized trip: model inputs plus the Wh/km label.

    Trip features differ by kind (distance/ascent/assist for e-bikes,
    altitude difference for e-scooters); unused fields stay None. The
    weather token stays raw text here; it is label-encoded against a
    corpus schema when the dataset matrix is built.
    """

    kind: str
    avg_speed_kmh: float
    avg_slope_pct: float
    wind_speed_kmh: float
    wind_we: float
    wind_ns: float
    weather: str
    label_wh_per_km: float
    distance_km: float | None = None
    total_ascent_m: float | None = None
    assist_level: float | None = None
    altitude_diff_m: float | None = None
    precipitation_mm: float | None = None
    temperature_c: float | None = None
    height_mid_cm: float | None = None
    weight_mid_kg: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FeatureError(f"unknown vehicle kind {self.kind!r}")
        if self.label_wh_per_km < 0:
            raise FeatureError("label must be non-negative")
        norm = self.wind_we ** 2 + self.wind_ns ** 2
        if not (abs(norm) < 1e-9 or abs(norm - 1.0) < 1e-9):
            raise FeatureError(f"wind vector must have norm 0 or 1, got {norm}")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "TripRecord":
        return cls(**obj)


def _trip_features(kind: str) -> tuple[str, ...]:
    return EBIKE_TRIP_FEATURES if kind == "ebike" else ESCOOTER_TRIP_FEATURES


@dataclass(frozen=True)
class FeatureSchema:
    """Frozen column order and weather-token dictionary for one dataset."""

    kind: str
    feature_names: tuple[str, ...]
    weather_codes: dict[str, int]
    include_rider: bool

    def __post_init__(self):
        if len(set(self.feature_names)) != len(self.feature_names):
            raise FeatureError("feature names must be unique")
        codes = list(self.weather_codes.values())
        if len(set(codes)) != len(codes):
            raise FeatureError("weather encoding must be bijective")

    def fingerprint(self) -> str:
        canon = json.dumps({
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "weather_codes": sorted(self.weather_codes.items()),
            "include_rider": self.include_rider,
        }, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "weather_codes": self.weather_codes,
            "include_rider": self.include_rider,
            "fingerprint": self.fingerprint(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureSchema":
        return cls(kind=obj["kind"],
                   feature_names=tuple(obj["feature_names"]),
                   weather_codes=dict(obj["weather_codes"]),
                   include_rider=obj["include_rider"])


def encode_weather(token: str, schema: FeatureSchema, strict: bool = True) -> int:
    """Integer code for a weather token under a frozen schema.

    Unseen tokens raise in strict mode, otherwise map to the reserved
    code -1.
    """
    code = schema.weather_codes.get(token)
    if code is None:
        if strict:
            raise UnknownToken(f"weather token {token!r} not in schema")
        return UNKNOWN_WEATHER_CODE
    return code


def build_schema(records: Sequence[TripRecord], include_rider: bool) -> FeatureSchema:
    """Derive the column order and weather dictionary from a record corpus."""
    if not records:
        raise FeatureError("cannot build a schema from zero records")
    kind = records[0].kind
    if any(r.kind != kind for r in records):
        raise MixedKinds("records mix vehicle kinds")

    names = list(_trip_features(kind)) + list(WEATHER_FEATURES)
    if kind == "ebike":
        for col in OPTIONAL_EBIKE_FEATURES:
            present = [getattr(r, col) is not None for r in records]
            if all(present):
                names.append(col)
            elif any(present):
                raise MissingFeature(
                    f"column {col!r} present on some records but not all; "
                    f"values are never imputed")
    if include_rider:
        names.extend(RIDER_FEATURES)

    tokens = sorted({r.weather for r in records})
    codes = {tok: i for i, tok in enumerate(tokens)}
    return FeatureSchema(kind=kind, feature_names=tuple(names),
                         weather_codes=codes, include_rider=include_rider)


def record_to_row(record: TripRecord, schema: FeatureSchema,
                  strict_weather: bool = True) -> list[float]:
    row = []
    for name in schema.feature_names:
        if name == "weather_code":
            row.append(float(encode_weather(record.weather, schema, strict_weather)))
            continue
        value = getattr(record, name)
        if value is None:
            raise MissingFeature(f"record is missing mandatory feature {name!r}")
        row.append(float(value))
    return row


def build_dataset(records: Sequence[TripRecord], include_rider: bool,
                  schema: FeatureSchema | None = None
                  ) -> tuple[np.ndarray, np.ndarray, FeatureSchema]:
    """Assemble the (matrix, labels, schema) triple the models consume.

    Passing an existing schema re-encodes new records against it (e.g. at
    prediction time); otherwise the schema is derived from the corpus.
    Dropping rider features removes exactly the two rider columns and
    leaves every other value untouched.
    """
    if not records:
        raise FeatureError("cannot build a dataset from zero records")
    if schema is None:
        schema = build_schema(records, include_rider)
    else:
        if schema.include_rider != include_rider:
            raise SchemaMismatch("schema rider flag does not match request")
        if any(r.kind != schema.kind for r in records):
            raise MixedKinds("records do not match schema kind")
    kind = records[0].kind
    if any(r.kind != kind for r in records):
        raise MixedKinds("records mix vehicle kinds")

    matrix = np.array([record_to_row(r, schema) for r in records], dtype=float)
    labels = np.array([r.label_wh_per_km for r in records], dtype=float)
    return matrix, labels, schema


# --- persistence: dataset CSV + schema JSON sidecar ---

def write_dataset_csv(matrix: np.ndarray, labels: np.ndarray,
                      schema: FeatureSchema, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(schema.feature_names) + [LABEL_COLUMN])
        for row, label in zip(matrix, labels):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(label))])


def read_dataset_csv(path: str | Path
                     ) -> tuple[np.ndarray, np.ndarray | None, list[str]]:
    """Read a persisted dataset; returns (matrix, labels, feature names).

    Labels are None for feature-only files (prediction inputs).
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise FeatureError(f"{path} has no header row")
        has_label = header[-1] == LABEL_COLUMN
        names = header[:-1] if has_label else header
        rows, labels = [], []
        for raw in reader:
            if not raw:
                continue
            values = [float(v) for v in raw]
            if has_label:
                rows.append(values[:-1])
                labels.append(values[-1])
            else:
                rows.append(values)
    return (np.array(rows, dtype=float),
            np.array(labels, dtype=float) if has_label else None,
            names)


def write_schema_json(schema: FeatureSchema, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schema.to_json(), indent=2) + "\n")


def read_schema_json(path: str | Path) -> FeatureSchema:
    return FeatureSchema.from_json(json.loads(Path(path).read_text()))


def record_from_trace(trace, summary, label_wh_per_km: float) -> TripRecord:
    """Bridge a trace plus its summary into a model-ready record.

    Trip-level weather condenses the per-sample values: numeric fields
    average over the samples that carry them, token fields take the most
    common value (first seen wins ties).
    """
    samples = trace.samples

    def mode(tokens):
        return Counter(tokens).most_common(1)[0][0]

    wind_direction = mode([s.wind_direction for s in samples])
    wind_we, wind_ns = encode_wind(wind_direction)
    temperatures = [s.temperature for s in samples if s.temperature is not None]
    precipitations = [s.precipitation for s in samples if s.precipitation is not None]

    kwargs = dict(
        kind=trace.kind,
        avg_speed_kmh=summary.avg_speed_kmh,
        avg_slope_pct=summary.avg_slope_pct,
        wind_speed_kmh=float(np.mean([s.wind_speed for s in samples])),
        wind_we=wind_we,
        wind_ns=wind_ns,
        weather=mode([s.weather for s in samples]),
        label_wh_per_km=label_wh_per_km,
        temperature_c=float(np.mean(temperatures)) if temperatures else None,
        precipitation_mm=float(np.mean(precipitations)) if precipitations else None,
        height_mid_cm=trace.rider.height_mid_cm if trace.rider else None,
        weight_mid_kg=trace.rider.weight_mid_kg if trace.rider else None,
    )
    if trace.kind == "ebike":
        kwargs.update(distance_km=summary.distance_km,
                      total_ascent_m=summary.total_ascent_m,
                      assist_level=trace.assist_level)
    else:
        kwargs.update(altitude_diff_m=summary.altitude_diff_m)
    return TripRecord(**kwargs)


def read_records_jsonl(path: str | Path) -> list[TripRecord]:
    """Read trip records from a JSON-lines file (one record object per line)."""
    records = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            records.append(TripRecord.from_json(json.loads(line)))
    return records


def write_records_jsonl(records: Sequence[TripRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json()) + "\n")
