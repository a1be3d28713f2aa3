"""Shared builders for traces, records, and synthetic benchmarks."""

from __future__ import annotations

import math
from datetime import datetime, timedelta

import numpy as np
import pytest

from tripenergy.features import TripRecord
from tripenergy.physics import DemandQuery, PhysicsParams, demand_wh_per_km
from tripenergy.rng import make_rng
from tripenergy.telemetry import COMPASS_ROSE, RiderProfile, TripSample, TripTrace

T0 = datetime(2023, 10, 12, 13, 35, 24)

# degrees of latitude per meter at radius 6371 km
DEG_PER_M = 180.0 / (math.pi * 6_371_000.0)


def make_sample(seconds: float = 0.0, lat: float = 53.39, lon: float = -6.26,
                alt: float = 50.0, speed: float = 15.0, soc: float | None = None,
                wind_speed: float = 5.0, wind_direction: str = "E",
                weather: str = "Dry", temperature: float | None = None,
                precipitation: float | None = None) -> TripSample:
    return TripSample(
        timestamp=T0 + timedelta(seconds=seconds),
        latitude=lat, longitude=lon, altitude=alt, speed=speed,
        wind_speed=wind_speed, wind_direction=wind_direction, weather=weather,
        soc=soc, temperature=temperature, precipitation=precipitation,
    )


def make_trace(kind: str = "escooter", n: int = 10, soc_start: float = 97.0,
               soc_per_step: float = 0.0, meters_per_step: float = 50.0,
               alt_per_step: float = 0.0, seconds_per_step: float = 10.0,
               speed: float = 15.0, **trace_kwargs) -> TripTrace:
    """Straight northbound trace with linear altitude and soc profiles."""
    samples = []
    for i in range(n):
        soc = soc_start + i * soc_per_step if kind == "escooter" else None
        samples.append(make_sample(
            seconds=i * seconds_per_step,
            lat=53.39 + i * meters_per_step * DEG_PER_M,
            alt=50.0 + i * alt_per_step,
            speed=speed,
            soc=soc,
        ))
    return TripTrace(kind=kind, samples=tuple(samples), **trace_kwargs)


def make_benchmark_records(n: int, seed: int, noise_sd: float = 1.0,
                           slope_lo_pct: float = 0.0, slope_hi_pct: float = 5.0,
                           weight_lo: float = 60.0, weight_hi: float = 100.0
                           ) -> list[TripRecord]:
    """Synthetic e-scooter fleet whose labels follow the demand formula.

    Each trip's label uses its true (unobserved) rider mass plus Gaussian
    noise; records expose only the 10 kg weight-band midpoint, the way
    riders report weight in practice.
    """
    rng = make_rng(seed, stream=9)
    p = PhysicsParams()
    tokens = ("Dry", "Wet", "Cloudy")
    records = []
    for _ in range(n):
        speed = float(rng.uniform(10.0, 30.0))
        slope_pct = float(rng.uniform(slope_lo_pct, slope_hi_pct))
        weight_true = float(rng.uniform(weight_lo, weight_hi))
        band_lo = 10.0 * math.floor(weight_true / 10.0)
        direction = COMPASS_ROSE[rng.integers(0, 16)]
        theta = math.radians(COMPASS_ROSE.index(direction) * 22.5)
        clean = demand_wh_per_km(
            DemandQuery(mass_kg=weight_true, slope=slope_pct / 100.0,
                        speed_kmh=speed), p, "escooter")
        label = max(0.0, clean + float(rng.normal(0.0, noise_sd)))
        records.append(TripRecord(
            kind="escooter",
            avg_speed_kmh=speed,
            avg_slope_pct=slope_pct,
            wind_speed_kmh=float(rng.uniform(0.0, 30.0)),
            wind_we=math.sin(theta),
            wind_ns=math.cos(theta),
            weather=tokens[rng.integers(0, 3)],
            label_wh_per_km=label,
            altitude_diff_m=slope_pct / 100.0 * 2000.0,
            height_mid_cm=float(150.0 + 5.0 * math.floor((weight_true - 55.0) / 10.0)),
            weight_mid_kg=band_lo + 5.0,
        ))
    return records


@pytest.fixture
def scooter_trace() -> TripTrace:
    return make_trace(kind="escooter", n=10, soc_start=97.0)


@pytest.fixture
def ebike_trace() -> TripTrace:
    return make_trace(kind="ebike", n=10,
                      assist_level=0.6,
                      voltage_endpoints=(41.0, 40.0),
                      rider=RiderProfile((170.0, 180.0), (70.0, 80.0)))
