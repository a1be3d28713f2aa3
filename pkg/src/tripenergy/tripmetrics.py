"""Per-trip geometric and kinematic summaries from a telemetry trace.

Distances come from great-circle arcs between consecutive GPS fixes (an
explicit odometer reading can override them for e-bikes). Altitude is
smoothed before ascent accumulation because consumer GPS altitude noise
inflates raw positive-delta sums.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .telemetry import TripTrace

EARTH_RADIUS_M = 6_371_000.0
DEFAULT_SMOOTHING_WINDOW = 5


class DegenerateTrip(ValueError):
    """Trip with no usable distance or duration."""


@dataclass(frozen=True)
class TripSummary:
    distance_km: float
    avg_speed_kmh: float
    total_ascent_m: float
    altitude_diff_m: float
    avg_slope_pct: float
    duration_s: float
    assist_level: float | None = None

    def to_json(self) -> dict:
        return {
            "distance_km": self.distance_km,
            "avg_speed_kmh": self.avg_speed_kmh,
            "total_ascent_m": self.total_ascent_m,
            "altitude_diff_m": self.altitude_diff_m,
            "avg_slope_pct": self.avg_slope_pct,
            "duration_s": self.duration_s,
            "assist_level": self.assist_level,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TripSummary":
        return cls(**obj)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")


def haversine(p1: tuple[float, float], p2: tuple[float, float]) -> float:
    """Great-circle distance in meters between (lat, lon) points in degrees."""
    lat1, lon1 = math.radians(p1[0]), math.radians(p1[1])
    lat2, lon2 = math.radians(p2[0]), math.radians(p2[1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    a = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def moving_average(values, window: int) -> np.ndarray:
    """Centered moving average, truncated at the edges.

    The averaging span is 2*(window//2) + 1 samples, so even windows widen
    to the next odd span; window=1 is the identity. Symmetric truncation
    keeps the filter equivariant under sequence reversal.
    """
    if window < 1:
        raise ValueError("smoothing window must be >= 1")
    arr = np.asarray(values, dtype=float)
    half = window // 2
    if half == 0 or arr.size == 0:
        return arr.copy()
    n = arr.size
    csum = np.concatenate([[0.0], np.cumsum(arr)])
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def _drop_repeated(samples):
    # Exact consecutive duplicates (sensor-merge artifacts) carry no distance,
    # time, or altitude information and would skew the per-sample speed mean.
    kept = [samples[0]]
    for s in samples[1:]:
        if s != kept[-1]:
            kept.append(s)
    return kept


def summarize(trace: TripTrace,
              smoothing_window: int = DEFAULT_SMOOTHING_WINDOW,
              odometer_km: float | None = None) -> TripSummary:
    """Reduce a trace to the per-trip features used for modelling.

    distance_km sums great-circle hops unless an odometer reading overrides
    it. total_ascent_m sums positive deltas of the smoothed altitude;
    altitude_diff_m is last minus first smoothed altitude. avg_slope_pct is
    ascent-based for e-bikes and net-difference-based for e-scooters.
    avg_speed_kmh averages only moving (> 0 km/h) samples.
    """
    if smoothing_window < 1:
        raise ValueError("smoothing window must be >= 1")
    samples = _drop_repeated(trace.samples)

    trajectory_m = sum(
        haversine((samples[i - 1].latitude, samples[i - 1].longitude),
                  (samples[i].latitude, samples[i].longitude))
        for i in range(1, len(samples))
    )
    distance_km = odometer_km if odometer_km is not None else trajectory_m / 1000.0
    if distance_km <= 0:
        raise DegenerateTrip("trip covers no distance")
    duration_s = (samples[-1].timestamp - samples[0].timestamp).total_seconds()
    if duration_s <= 0:
        raise DegenerateTrip("trip has no duration")

    altitude = moving_average([s.altitude for s in samples], smoothing_window)
    deltas = np.diff(altitude)
    total_ascent_m = float(np.sum(deltas[deltas > 0])) if deltas.size else 0.0
    altitude_diff_m = float(altitude[-1] - altitude[0])

    moving = [s.speed for s in samples if s.speed > 0]
    avg_speed_kmh = float(np.mean(moving)) if moving else 0.0

    if trace.kind == "ebike":
        avg_slope_pct = 100.0 * total_ascent_m / (distance_km * 1000.0)
    else:
        avg_slope_pct = 100.0 * altitude_diff_m / (distance_km * 1000.0)

    return TripSummary(
        distance_km=distance_km,
        avg_speed_kmh=avg_speed_kmh,
        total_ascent_m=total_ascent_m,
        altitude_diff_m=altitude_diff_m,
        avg_slope_pct=avg_slope_pct,
        duration_s=duration_s,
        assist_level=trace.assist_level,
    )
