"""Trip telemetry ingestion: CSV parsing, SoC event alignment, trace validation.

Raw trips arrive as one CSV per journey (a fixed column schema per vehicle
kind) plus, optionally, a state-of-charge event stream recorded separately
and joined on timestamps. Everything here is pure: parsers return immutable
traces and never touch shared state, so many trips can be processed in
parallel.
"""

from __future__ import annotations

import csv
import json
from bisect import bisect_right
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

TIMESTAMP_FORMAT = "%d/%m/%Y %H:%M:%S"

# 16-point compass rose, clockwise from north. "CALM" marks no wind.
COMPASS_ROSE = (
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE",
    "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW",
)
CALM = "CALM"

KINDS = ("ebike", "escooter")

EBIKE_HEADER = (
    "timestamp", "latitude", "longitude", "altitude", "speed",
    "wind_speed", "wind_direction", "weather", "temperature",
)
ESCOOTER_HEADER = (
    "timestamp", "latitude", "longitude", "speed", "altitude",
    "soc", "wind_speed", "wind_direction", "weather",
)
SOC_EVENT_HEADER = ("timestamp", "soc")

# validate_trace thresholds
GPS_JUMP_SPEED_KMH = 60.0
TIME_GAP_S = 60.0
SOC_INCREASE_PCT = 1.0


class TelemetryError(ValueError):
    """Base class for telemetry ingestion failures."""


class MissingColumn(TelemetryError):
    def __init__(self, column: str, path: str | Path | None = None):
        self.column = column
        self.path = str(path) if path is not None else None
        where = f" in {self.path}" if self.path else ""
        super().__init__(f"missing or misplaced column {column!r}{where}")


class MalformedTimestamp(TelemetryError):
    def __init__(self, row: int, column: str, value: str):
        self.row, self.column, self.value = row, column, value
        super().__init__(
            f"row {row}, column {column!r}: cannot parse timestamp {value!r}"
            f" (expected dd/mm/yyyy HH:MM:SS)"
        )


class MalformedValue(TelemetryError):
    def __init__(self, row: int, column: str, value: str):
        self.row, self.column, self.value = row, column, value
        super().__init__(f"row {row}, column {column!r}: cannot parse value {value!r}")


class OutOfRangeValue(TelemetryError):
    def __init__(self, column: str, value, constraint: str, row: int | None = None):
        self.row, self.column, self.value = row, column, value
        self.constraint = constraint
        where = f"row {row}, " if row is not None else ""
        super().__init__(f"{where}column {column!r}: value {value!r} violates {constraint}")


class NoOverlap(TelemetryError):
    """SoC event span and trace span are disjoint."""


class NonMonotonicTimestamps(TelemetryError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"sample {index} has an earlier timestamp than its predecessor")


@dataclass(frozen=True)
class RiderProfile:
    """Anonymised rider attributes, collected as ranges."""

    height_range: tuple[float, float]  # cm, (low, high)
    weight_range: tuple[float, float]  # kg, (low, high)

    def __post_init__(self):
        for name, (lo, hi) in (("height_range", self.height_range),
                               ("weight_range", self.weight_range)):
            if not (0 < lo <= hi):
                raise OutOfRangeValue(name, (lo, hi), "0 < low <= high")

    @property
    def height_mid_cm(self) -> float:
        return 0.5 * (self.height_range[0] + self.height_range[1])

    @property
    def weight_mid_kg(self) -> float:
        return 0.5 * (self.weight_range[0] + self.weight_range[1])


@dataclass(frozen=True)
class TripSample:
    """One telemetry sample. Units: degrees, meters, km/h, percent, Celsius, mm."""

    timestamp: datetime
    latitude: float
    longitude: float
    altitude: float
    speed: float
    wind_speed: float
    wind_direction: str  # 16-point rose token or "CALM"
    weather: str
    soc: float | None = None
    temperature: float | None = None
    precipitation: float | None = None

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise OutOfRangeValue("latitude", self.latitude, "[-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise OutOfRangeValue("longitude", self.longitude, "[-180, 180]")
        if self.speed < 0:
            raise OutOfRangeValue("speed", self.speed, ">= 0")
        if self.wind_speed < 0:
            raise OutOfRangeValue("wind_speed", self.wind_speed, ">= 0")
        if self.soc is not None and not 0.0 <= self.soc <= 100.0:
            raise OutOfRangeValue("soc", self.soc, "[0, 100]")
        if self.wind_direction not in COMPASS_ROSE and self.wind_direction != CALM:
            raise OutOfRangeValue("wind_direction", self.wind_direction,
                                  "16-point compass rose or CALM")


@dataclass(frozen=True)
class SocEvent:
    """A state-of-charge reading at a point in time (percent)."""

    timestamp: datetime
    soc: float

    def __post_init__(self):
        if not 0.0 <= self.soc <= 100.0:
            raise OutOfRangeValue("soc", self.soc, "[0, 100]")


@dataclass(frozen=True)
class TripTrace:
    """Time-ordered telemetry for one trip."""

    kind: str
    samples: tuple[TripSample, ...]
    assist_level: float | None = None  # ebike only, fraction of demand supplied by the motor
    voltage_endpoints: tuple[float, float] | None = None  # ebike only, (v_start, v_end) volts
    rider: RiderProfile | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TelemetryError(f"unknown vehicle kind {self.kind!r}")
        object.__setattr__(self, "samples", tuple(self.samples))
        if len(self.samples) < 2:
            raise TelemetryError("a trace needs at least 2 samples")
        for i in range(1, len(self.samples)):
            if self.samples[i].timestamp < self.samples[i - 1].timestamp:
                raise NonMonotonicTimestamps(i)
        if self.kind == "escooter":
            if any(s.soc is None for s in self.samples):
                raise TelemetryError("escooter traces require soc on every sample")
            if self.assist_level is not None or self.voltage_endpoints is not None:
                raise TelemetryError("assist_level / voltage_endpoints are ebike-only fields")
        if self.assist_level is not None and not 0.0 <= self.assist_level <= 1.0:
            raise OutOfRangeValue("assist_level", self.assist_level, "[0, 1]")

    @property
    def start_time(self) -> datetime:
        return self.samples[0].timestamp

    @property
    def end_time(self) -> datetime:
        return self.samples[-1].timestamp

    @property
    def duration_s(self) -> float:
        return (self.end_time - self.start_time).total_seconds()


@dataclass(frozen=True)
class TraceWarning:
    code: str  # "gps_jump" | "time_gap" | "soc_increase"
    index: int  # index of the later sample of the offending pair
    message: str


def _parse_timestamp(value: str, row: int, column: str = "timestamp") -> datetime:
    try:
        return datetime.strptime(value, TIMESTAMP_FORMAT)
    except ValueError:
        raise MalformedTimestamp(row, column, value) from None


def _parse_float(value: str, row: int, column: str, optional: bool = False) -> float | None:
    if value == "":
        if optional:
            return None
        raise MalformedValue(row, column, value)
    try:
        return float(value)
    except ValueError:
        raise MalformedValue(row, column, value) from None


def _parse_wind_direction(value: str, row: int) -> str:
    token = value.strip().upper()
    if token in COMPASS_ROSE or token == CALM:
        return token
    raise OutOfRangeValue("wind_direction", value, "16-point compass rose or CALM", row=row)


def _check_header(header: Sequence[str], expected: Sequence[str], path: Path) -> None:
    header = [h.strip() for h in header]
    for i, name in enumerate(expected):
        if i >= len(header) or header[i] != name:
            raise MissingColumn(name, path)
    if len(header) > len(expected):
        raise TelemetryError(
            f"unexpected extra column {header[len(expected)]!r} in {path}"
        )


def parse_trip_csv(path: str | Path, kind: str) -> TripTrace:
    """Parse one trip CSV into a TripTrace.

    The header must match the declared kind's schema exactly (fail fast on
    schema drift). Rows violating sample invariants are rejected with the
    offending row and column named.
    """
    if kind not in KINDS:
        raise TelemetryError(f"unknown vehicle kind {kind!r}")
    path = Path(path)
    expected = EBIKE_HEADER if kind == "ebike" else ESCOOTER_HEADER
    samples: list[TripSample] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(expected[0], path) from None
        _check_header(header, expected, path)
        for row_no, raw in enumerate(reader, start=2):
            if not raw or all(cell.strip() == "" for cell in raw):
                continue
            if len(raw) != len(expected):
                raise MalformedValue(row_no, expected[min(len(raw), len(expected) - 1)],
                                     ",".join(raw))
            cells = dict(zip(expected, (c.strip() for c in raw)))
            ts = _parse_timestamp(cells["timestamp"], row_no)
            try:
                sample = TripSample(
                    timestamp=ts,
                    latitude=_parse_float(cells["latitude"], row_no, "latitude"),
                    longitude=_parse_float(cells["longitude"], row_no, "longitude"),
                    altitude=_parse_float(cells["altitude"], row_no, "altitude"),
                    speed=_parse_float(cells["speed"], row_no, "speed"),
                    wind_speed=_parse_float(cells["wind_speed"], row_no, "wind_speed"),
                    wind_direction=_parse_wind_direction(cells["wind_direction"], row_no),
                    weather=cells["weather"],
                    soc=(_parse_float(cells["soc"], row_no, "soc")
                         if "soc" in cells else None),
                    temperature=(_parse_float(cells["temperature"], row_no,
                                              "temperature", optional=True)
                                 if "temperature" in cells else None),
                )
            except OutOfRangeValue as err:
                if err.row is None:
                    raise OutOfRangeValue(err.column, err.value, err.constraint,
                                          row=row_no) from None
                raise
            samples.append(sample)
    return TripTrace(kind=kind, samples=tuple(samples))


def parse_soc_events_csv(path: str | Path) -> list[SocEvent]:
    """Parse a `timestamp,soc` event stream (discharge readings for one trip)."""
    path = Path(path)
    events: list[SocEvent] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(SOC_EVENT_HEADER[0], path) from None
        _check_header(header, SOC_EVENT_HEADER, path)
        for row_no, raw in enumerate(reader, start=2):
            if not raw or all(cell.strip() == "" for cell in raw):
                continue
            cells = [c.strip() for c in raw]
            ts = _parse_timestamp(cells[0], row_no)
            soc = _parse_float(cells[1], row_no, "soc")
            if not 0.0 <= soc <= 100.0:
                raise OutOfRangeValue("soc", soc, "[0, 100]", row=row_no)
            events.append(SocEvent(ts, soc))
    return events


def align_soc_events(trace: TripTrace, events: Sequence[SocEvent]) -> TripTrace:
    """Assign each sample the most recent event soc at or before its timestamp.

    Samples before the first event take the first event's value, so the
    aligned soc is a right-continuous step function of sample time. Returns
    a new trace; the input is never mutated. Idempotent for fixed events.
    """
    events = list(events)
    if not events:
        raise TelemetryError("no soc events to align")
    for prev, cur in zip(events, events[1:]):
        if cur.timestamp < prev.timestamp:
            raise TelemetryError("soc events must be sorted by timestamp")
        if cur.soc > prev.soc:
            raise OutOfRangeValue("soc", cur.soc,
                                  "non-increasing over time (discharge only)")
    trace_span = (trace.start_time, trace.end_time)
    event_span = (events[0].timestamp, events[-1].timestamp)
    if event_span[0] > trace_span[1] or event_span[1] < trace_span[0]:
        raise NoOverlap(
            f"event span {event_span[0]}..{event_span[1]} does not overlap "
            f"trace span {trace_span[0]}..{trace_span[1]}"
        )
    times = [e.timestamp for e in events]
    aligned = tuple(
        replace(s, soc=events[max(bisect_right(times, s.timestamp) - 1, 0)].soc)
        for s in trace.samples
    )
    return replace(trace, samples=aligned)


def validate_trace(trace: TripTrace) -> list[TraceWarning]:
    """Flag physically implausible jumps without mutating the trace.

    Warns on consecutive-sample GPS jumps implying > 60 km/h, time gaps
    > 60 s, and soc increases > 1 percentage point (charging artifact).
    """
    from .tripmetrics import haversine  # deferred: tripmetrics imports this module

    warnings: list[TraceWarning] = []
    for i in range(1, len(trace.samples)):
        a, b = trace.samples[i - 1], trace.samples[i]
        dt = (b.timestamp - a.timestamp).total_seconds()
        dist_m = haversine((a.latitude, a.longitude), (b.latitude, b.longitude))
        if dist_m > 0 and (dt == 0 or dist_m / dt * 3.6 > GPS_JUMP_SPEED_KMH):
            implied = "inf" if dt == 0 else f"{dist_m / dt * 3.6:.1f}"
            warnings.append(TraceWarning(
                "gps_jump", i,
                f"samples {i - 1}->{i}: {dist_m:.1f} m in {dt:.0f} s "
                f"implies {implied} km/h"))
        if dt > TIME_GAP_S:
            warnings.append(TraceWarning(
                "time_gap", i, f"samples {i - 1}->{i}: {dt:.0f} s gap"))
        if a.soc is not None and b.soc is not None and b.soc - a.soc > SOC_INCREASE_PCT:
            warnings.append(TraceWarning(
                "soc_increase", i,
                f"samples {i - 1}->{i}: soc rose {a.soc:.0f} -> {b.soc:.0f}"))
    return warnings


# --- canonical JSON form (units documented in schemas/trip_trace.schema.json) ---

def _sample_to_json(s: TripSample) -> dict:
    return {
        "timestamp": s.timestamp.strftime(TIMESTAMP_FORMAT),
        "latitude_deg": s.latitude,
        "longitude_deg": s.longitude,
        "altitude_m": s.altitude,
        "speed_kmh": s.speed,
        "soc_pct": s.soc,
        "wind_speed_kmh": s.wind_speed,
        "wind_direction": s.wind_direction,
        "weather": s.weather,
        "temperature_c": s.temperature,
        "precipitation_mm": s.precipitation,
    }


def _sample_from_json(obj: dict) -> TripSample:
    return TripSample(
        timestamp=datetime.strptime(obj["timestamp"], TIMESTAMP_FORMAT),
        latitude=obj["latitude_deg"],
        longitude=obj["longitude_deg"],
        altitude=obj["altitude_m"],
        speed=obj["speed_kmh"],
        wind_speed=obj["wind_speed_kmh"],
        wind_direction=obj["wind_direction"],
        weather=obj["weather"],
        soc=obj.get("soc_pct"),
        temperature=obj.get("temperature_c"),
        precipitation=obj.get("precipitation_mm"),
    )


def trace_to_json(trace: TripTrace) -> dict:
    obj = {
        "kind": trace.kind,
        "assist_level": trace.assist_level,
        "voltage_endpoints": (
            {"v_start_v": trace.voltage_endpoints[0], "v_end_v": trace.voltage_endpoints[1]}
            if trace.voltage_endpoints is not None else None
        ),
        "rider": (
            {"height_range_cm": list(trace.rider.height_range),
             "weight_range_kg": list(trace.rider.weight_range)}
            if trace.rider is not None else None
        ),
        "samples": [_sample_to_json(s) for s in trace.samples],
    }
    return obj


def trace_from_json(obj: dict) -> TripTrace:
    rider = None
    if obj.get("rider") is not None:
        r = obj["rider"]
        rider = RiderProfile(height_range=tuple(r["height_range_cm"]),
                             weight_range=tuple(r["weight_range_kg"]))
    endpoints = None
    if obj.get("voltage_endpoints") is not None:
        v = obj["voltage_endpoints"]
        endpoints = (v["v_start_v"], v["v_end_v"])
    return TripTrace(
        kind=obj["kind"],
        samples=tuple(_sample_from_json(s) for s in obj["samples"]),
        assist_level=obj.get("assist_level"),
        voltage_endpoints=endpoints,
        rider=rider,
    )


def write_trace_json(trace: TripTrace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(trace_to_json(trace), indent=2) + "\n")


def read_trace_json(path: str | Path) -> TripTrace:
    return trace_from_json(json.loads(Path(path).read_text()))
