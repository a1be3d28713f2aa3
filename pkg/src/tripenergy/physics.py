"""Physics baseline for per-distance energy demand.

Demand per meter combines a grade term, rolling resistance, and
aerodynamic drag:

    P_d = g*m*s + C_r*m*g + 0.5*C_d*rho*A*v^2      [J/m]

with v in m/s. An e-scooter consumes the full demand; an e-bike's motor
supplies only the assist_level fraction of it (the rider pedals the rest).
All external speeds are km/h; the single km/h -> m/s conversion lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .features import MissingFeature, TripRecord

KMH_TO_MPS = 1.0 / 3.6
# J/m == W*s/m -> Wh/km: *1000 m/km / 3600 s/h
JPM_TO_WH_PER_KM = 1000.0 / 3600.0

# Vendor-typical curb weights; configuration defaults, not measured values.
DEVICE_MASS_KG = {"ebike": 25.0, "escooter": 14.2}


class MissingAssistLevel(ValueError):
    """E-bike demand requested without an assistance level."""


@dataclass(frozen=True)
class PhysicsParams:
    """Model constants for asphalt riding; all strictly positive."""

    g: float = 9.81      # m/s^2
    c_r: float = 0.001   # rolling resistance coefficient
    rho: float = 1.29    # air density, kg/m^3
    area: float = 0.5    # frontal area of device + rider, m^2
    c_d: float = 0.7     # drag coefficient

    def __post_init__(self):
        for name in ("g", "c_r", "rho", "area", "c_d"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class DemandQuery:
    mass_kg: float                    # device + rider
    slope: float                      # grade (rise/run), negative downhill
    speed_kmh: float
    assist_level: float | None = None  # ebike only, 0 = none .. 1 = full

    def __post_init__(self):
        if self.mass_kg <= 0:
            raise ValueError("mass must be positive")
        if self.speed_kmh < 0:
            raise ValueError("speed must be non-negative")
        if self.assist_level is not None and not 0.0 <= self.assist_level <= 1.0:
            raise ValueError("assist_level must lie in [0, 1]")


def demand_per_meter(q: DemandQuery, p: PhysicsParams = PhysicsParams()) -> float:
    """Energy demand in J/m (equivalently, required force in newtons).

    May be negative on a steep descent; callers decide whether to clamp.
    """
    v_mps = q.speed_kmh * KMH_TO_MPS
    return (p.g * q.mass_kg * q.slope
            + p.c_r * q.mass_kg * p.g
            + 0.5 * p.c_d * p.rho * p.area * v_mps ** 2)


def demand_wh_per_km(q: DemandQuery, p: PhysicsParams = PhysicsParams(),
                     kind: str = "escooter") -> float:
    """Predicted consumption in Wh/km, clamped at 0 from below.

    E-scooters draw the full demand from the battery; e-bikes draw the
    assist_level fraction (0 gives an unpowered ride, 1 full electric).
    """
    demand = demand_per_meter(q, p) * JPM_TO_WH_PER_KM
    if kind == "ebike":
        if q.assist_level is None:
            raise MissingAssistLevel("e-bike prediction requires assist_level")
        demand *= q.assist_level
    return max(0.0, demand)


def physics_predict(record: TripRecord, p: PhysicsParams = PhysicsParams(),
                    device_mass_kg: float | None = None) -> float:
    """Baseline Wh/km prediction for a summarized trip record.

    Mass is the device mass plus the rider's weight-range midpoint; mass
    cannot be dropped from this model, so rider weight is mandatory here
    even when the learned models run without rider features.
    """
    if record.weight_mid_kg is None:
        raise MissingFeature("physics baseline requires a rider weight range")
    if device_mass_kg is None:
        device_mass_kg = DEVICE_MASS_KG[record.kind]
    q = DemandQuery(
        mass_kg=device_mass_kg + record.weight_mid_kg,
        slope=record.avg_slope_pct / 100.0,
        speed_kmh=record.avg_speed_kmh,
        assist_level=record.assist_level,
    )
    return demand_wh_per_km(q, p, kind=record.kind)
