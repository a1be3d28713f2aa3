"""Battery open-circuit-voltage modelling and trip energy accounting.

The cell voltage is modelled as

    V(soc) = k0 + k1*soc + k2/soc + k3*ln(soc) + k4*ln(1 - soc)

which is linear in the coefficients, so fitting reduces to a least-squares
solve over the basis {1, soc, 1/soc, ln soc, ln(1-soc)}. The log terms are
singular at 0 and 1, hence the curve only ever operates on an open
sub-interval of (0, 1). A fitted curve is certified strictly increasing on
its domain, which makes voltage-to-soc inversion a bracketed bisection with
guaranteed convergence.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .tripmetrics import DegenerateTrip

# Keeps the log terms well away from their singularities; matches the
# usable region of typical lithium cell curves.
DEFAULT_SOC_DOMAIN = (0.02, 0.98)

_MONOTONE_GRID = 513  # dense-grid certificate resolution for monotonicity


class BatteryError(ValueError):
    """Base class for battery-model failures."""


class DomainError(BatteryError):
    """soc outside the curve's valid domain."""


class RankDeficient(BatteryError):
    """Fit basis is collinear on the given points."""


class NonMonotoneFit(BatteryError):
    """Fitted curve is not strictly increasing on its domain."""


class OutOfRange(BatteryError):
    """Voltage outside the invertible range of the curve."""


class NegativeDrop(BatteryError):
    """End voltage above start voltage (charging, not discharge)."""


@dataclass(frozen=True)
class OcvCurve:
    """Fitted cell curve plus validity interval and pack scale."""

    k0: float
    k1: float
    k2: float
    k3: float
    k4: float
    soc_domain: tuple[float, float] = DEFAULT_SOC_DOMAIN
    cells_in_series: int = 1

    def __post_init__(self):
        lo, hi = self.soc_domain
        if not (0.0 < lo < hi < 1.0):
            raise BatteryError(f"soc_domain {self.soc_domain} must satisfy 0 < lo < hi < 1")
        if self.cells_in_series < 1:
            raise BatteryError("cells_in_series must be >= 1")

    @property
    def coefficients(self) -> tuple[float, float, float, float, float]:
        return (self.k0, self.k1, self.k2, self.k3, self.k4)


@dataclass(frozen=True)
class BatterySpec:
    capacity_wh: float
    cells_in_series: int = 1

    def __post_init__(self):
        if self.capacity_wh <= 0:
            raise BatteryError("capacity must be positive")
        if self.cells_in_series < 1:
            raise BatteryError("cells_in_series must be >= 1")


def ocv_voltage(curve: OcvCurve, soc: float) -> float:
    """Pack terminal voltage at rest for a state of charge in the domain."""
    lo, hi = curve.soc_domain
    if not lo <= soc <= hi:
        raise DomainError(f"soc {soc} outside domain [{lo}, {hi}]")
    cell = (curve.k0 + curve.k1 * soc + curve.k2 / soc
            + curve.k3 * math.log(soc) + curve.k4 * math.log(1.0 - soc))
    return curve.cells_in_series * cell


def fit_ocv(points: Sequence[tuple[float, float]], cells_in_series: int = 1) -> OcvCurve:
    """Least-squares fit of the cell curve to (soc fraction, pack voltage) pairs.

    Input voltages are divided by cells_in_series so the stored coefficients
    are per cell. The validity domain is the input soc range clipped into
    the default domain. Rejects collinear bases and non-monotone fits.
    """
    pts = [(float(s), float(v)) for s, v in points]
    if len(pts) < 5:
        raise RankDeficient(f"need at least 5 points to fit 5 coefficients, got {len(pts)}")
    if cells_in_series < 1:
        raise BatteryError("cells_in_series must be >= 1")
    soc = np.array([p[0] for p in pts])
    volts = np.array([p[1] for p in pts]) / cells_in_series
    if np.any(soc <= 0.0) or np.any(soc >= 1.0):
        raise DomainError("all soc values must lie strictly inside (0, 1)")

    basis = np.column_stack([
        np.ones_like(soc), soc, 1.0 / soc, np.log(soc), np.log(1.0 - soc),
    ])
    coeffs, _, rank, _ = np.linalg.lstsq(basis, volts, rcond=None)
    if rank < 5:
        raise RankDeficient("basis is collinear on the given soc values")

    lo = max(float(soc.min()), DEFAULT_SOC_DOMAIN[0])
    hi = min(float(soc.max()), DEFAULT_SOC_DOMAIN[1])
    if not lo < hi:
        raise BatteryError("usable soc domain is empty after clipping")
    curve = OcvCurve(*(float(k) for k in coeffs),
                     soc_domain=(lo, hi), cells_in_series=cells_in_series)

    grid = np.linspace(lo, hi, _MONOTONE_GRID)
    deriv = (curve.k1 - curve.k2 / grid ** 2 + curve.k3 / grid
             - curve.k4 / (1.0 - grid))
    if np.any(deriv <= 0.0):
        raise NonMonotoneFit("fitted curve is not strictly increasing on its domain")
    return curve


def voltage_to_soc(curve: OcvCurve, voltage: float) -> float:
    """Invert the monotone curve by bisection.

    Converges to float resolution of the soc interval, so the residual
    voltage is far below 1e-9 V for any physically plausible curve slope.
    """
    lo, hi = curve.soc_domain
    v_lo, v_hi = ocv_voltage(curve, lo), ocv_voltage(curve, hi)
    if not v_lo <= voltage <= v_hi:
        raise OutOfRange(f"voltage {voltage} outside invertible range [{v_lo:.6f}, {v_hi:.6f}]")
    a, b = lo, hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        if ocv_voltage(curve, mid) < voltage:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def identity_curve() -> OcvCurve:
    """Curve with V(soc) = soc; lets soc fractions flow through the voltage path."""
    return OcvCurve(0.0, 1.0, 0.0, 0.0, 0.0)


def trip_energy(v_start: float, v_end: float, curve: OcvCurve, spec: BatterySpec) -> float:
    """Energy in Wh consumed between two endpoint voltages.

    Only the trip's first and last readings matter: the drop in state of
    charge between them, scaled by pack capacity, is the consumed energy.
    """
    if v_end > v_start:
        raise NegativeDrop(f"end voltage {v_end} above start voltage {v_start}")
    soc_start = voltage_to_soc(curve, v_start)
    soc_end = voltage_to_soc(curve, v_end)
    return (soc_start - soc_end) * spec.capacity_wh


def soc_drop_energy(soc_start_pct: float, soc_end_pct: float, spec: BatterySpec) -> float:
    """Energy in Wh from a directly reported soc drop (percent).

    The e-scooter path: the app reports soc in percent, so no voltage
    inversion is needed and the full [0, 100] range is usable.
    """
    for name, value in (("soc_start", soc_start_pct), ("soc_end", soc_end_pct)):
        if not 0.0 <= value <= 100.0:
            raise OutOfRange(f"{name} {value} outside [0, 100]")
    if soc_end_pct > soc_start_pct:
        raise NegativeDrop(f"end soc {soc_end_pct} above start soc {soc_start_pct}")
    return (soc_start_pct - soc_end_pct) / 100.0 * spec.capacity_wh


def energy_efficiency(energy_wh: float, distance_km: float) -> float:
    """Wh consumed per km travelled; the modelling label."""
    if distance_km <= 0:
        raise DegenerateTrip("distance must be positive")
    return energy_wh / distance_km


# --- persistence ---

def curve_to_json(curve: OcvCurve) -> dict:
    return {
        "k0": curve.k0, "k1": curve.k1, "k2": curve.k2,
        "k3": curve.k3, "k4": curve.k4,
        "soc_lo": curve.soc_domain[0], "soc_hi": curve.soc_domain[1],
        "cells_in_series": curve.cells_in_series,
    }


def curve_from_json(obj: dict) -> OcvCurve:
    return OcvCurve(
        obj["k0"], obj["k1"], obj["k2"], obj["k3"], obj["k4"],
        soc_domain=(obj["soc_lo"], obj["soc_hi"]),
        cells_in_series=obj["cells_in_series"],
    )


def write_curve_json(curve: OcvCurve, path: str | Path) -> None:
    Path(path).write_text(json.dumps(curve_to_json(curve), indent=2) + "\n")


def read_curve_json(path: str | Path) -> OcvCurve:
    return curve_from_json(json.loads(Path(path).read_text()))


def read_fit_points_csv(path: str | Path) -> list[tuple[float, float]]:
    """Read `soc,voltage` calibration pairs (soc as a fraction in (0, 1))."""
    points = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["soc", "voltage"]:
            raise BatteryError(f"expected header 'soc,voltage' in {path}")
        for row in reader:
            if not row or all(c.strip() == "" for c in row):
                continue
            points.append((float(row[0]), float(row[1])))
    return points
