"""Demand formula, unit conversion, and the baseline predictor."""

import pytest
from hypothesis import given, strategies as st

from tripenergy.features import MissingFeature, TripRecord
from tripenergy.physics import (
    DEVICE_MASS_KG,
    DemandQuery,
    MissingAssistLevel,
    PhysicsParams,
    demand_per_meter,
    demand_wh_per_km,
    physics_predict,
)


def oracle_demand(m, s, v_kmh, g=9.81, c_r=0.001, rho=1.29, area=0.5, c_d=0.7):
    """Independent arrangement of the same formula."""
    return g * m * (s + c_r) + 0.5 * c_d * rho * area * (v_kmh / 3.6) ** 2


def make_record(weight_mid=80.0, speed=25.0, slope_pct=0.0, kind="escooter",
                assist=None):
    return TripRecord(
        kind=kind, avg_speed_kmh=speed, avg_slope_pct=slope_pct,
        wind_speed_kmh=5.0, wind_we=1.0, wind_ns=0.0, weather="Dry",
        label_wh_per_km=10.0, altitude_diff_m=0.0 if kind == "escooter" else None,
        distance_km=2.0 if kind == "ebike" else None,
        total_ascent_m=0.0 if kind == "ebike" else None,
        assist_level=assist, weight_mid_kg=weight_mid, height_mid_cm=175.0,
    )


class TestDemandPerMeter:
    def test_rolling_only(self):
        assert demand_per_meter(DemandQuery(100.0, 0.0, 0.0)) == \
            pytest.approx(0.981, abs=1e-12)

    def test_flat_cruise(self):
        assert demand_per_meter(DemandQuery(80.0, 0.0, 25.0)) == \
            pytest.approx(11.6716, abs=1e-3)

    def test_slope_term_is_additive(self):
        flat = demand_per_meter(DemandQuery(80.0, 0.0, 25.0))
        hill = demand_per_meter(DemandQuery(80.0, 0.05, 25.0))
        assert hill == pytest.approx(flat + 9.81 * 80.0 * 0.05, abs=1e-9)
        assert hill == pytest.approx(50.9116, abs=1e-3)

    def test_downhill_may_be_negative(self):
        assert demand_per_meter(DemandQuery(80.0, -0.2, 5.0)) < 0.0

    @given(st.floats(30.0, 200.0), st.floats(-0.1, 0.1), st.floats(0.0, 45.0))
    def test_matches_independent_oracle(self, m, s, v):
        got = demand_per_meter(DemandQuery(m, s, v))
        assert got == pytest.approx(oracle_demand(m, s, v), rel=1e-12, abs=1e-12)

    @given(st.floats(30.0, 200.0), st.floats(0.0, 0.1), st.floats(0.1, 45.0))
    def test_strictly_increasing_in_each_argument(self, m, s, v):
        base = demand_per_meter(DemandQuery(m, s, v))
        assert demand_per_meter(DemandQuery(m + 1.0, s, v)) > base
        assert demand_per_meter(DemandQuery(m, s + 0.01, v)) > base
        assert demand_per_meter(DemandQuery(m, s, v + 1.0)) > base

    @given(st.floats(30.0, 200.0), st.floats(50.0, 220.0),
           st.floats(-0.1, 0.1), st.floats(0.0, 45.0))
    def test_drag_term_is_mass_free(self, m1, m2, s, v):
        gap1 = demand_per_meter(DemandQuery(m1, s, v)) \
            - demand_per_meter(DemandQuery(m1, s, 0.0))
        gap2 = demand_per_meter(DemandQuery(m2, s, v)) \
            - demand_per_meter(DemandQuery(m2, s, 0.0))
        assert gap1 == pytest.approx(gap2, rel=1e-9, abs=1e-12)


class TestDemandWhPerKm:
    def test_unit_conversion(self):
        q = DemandQuery(80.0, 0.0, 25.0)
        assert demand_wh_per_km(q, kind="escooter") == \
            pytest.approx(3.2421, abs=1e-3)
        assert demand_wh_per_km(q, kind="escooter") == \
            pytest.approx(demand_per_meter(q) / 3.6, rel=1e-15)

    def test_no_assistance_no_draw(self):
        q = DemandQuery(80.0, 0.0, 25.0, assist_level=0.0)
        assert demand_wh_per_km(q, kind="ebike") == 0.0

    def test_full_assistance_matches_scooter(self):
        full = DemandQuery(80.0, 0.02, 22.0, assist_level=1.0)
        bare = DemandQuery(80.0, 0.02, 22.0)
        assert demand_wh_per_km(full, kind="ebike") == \
            demand_wh_per_km(bare, kind="escooter")

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_linear_in_assist_level(self, a1, a2):
        if a1 == 0.0 and a2 == 0.0:
            return
        q1 = DemandQuery(90.0, 0.03, 20.0, assist_level=a1)
        q2 = DemandQuery(90.0, 0.03, 20.0, assist_level=a2)
        v1 = demand_wh_per_km(q1, kind="ebike")
        v2 = demand_wh_per_km(q2, kind="ebike")
        base = demand_wh_per_km(DemandQuery(90.0, 0.03, 20.0), kind="escooter")
        assert v1 == pytest.approx(a1 * base, rel=1e-12, abs=1e-12)
        assert v2 == pytest.approx(a2 * base, rel=1e-12, abs=1e-12)

    def test_missing_assist_level(self):
        with pytest.raises(MissingAssistLevel):
            demand_wh_per_km(DemandQuery(80.0, 0.0, 25.0), kind="ebike")

    def test_steep_descent_clamps_to_zero(self):
        q = DemandQuery(80.0, -0.2, 5.0)
        assert demand_wh_per_km(q, kind="escooter") == 0.0


class TestPhysicsPredict:
    def test_midpoint_mass_path(self):
        # weight range (75, 85) -> midpoint 80; device 25 kg -> query mass 105
        record = make_record(weight_mid=80.0, speed=25.0, slope_pct=0.0)
        got = physics_predict(record, device_mass_kg=25.0)
        assert got == pytest.approx(oracle_demand(105.0, 0.0, 25.0) / 3.6,
                                    rel=1e-9)
        assert got == pytest.approx(3.31025, abs=1e-4)

    def test_default_device_mass_by_kind(self):
        record = make_record()
        got = physics_predict(record)
        mass = DEVICE_MASS_KG["escooter"] + 80.0
        assert got == pytest.approx(oracle_demand(mass, 0.0, 25.0) / 3.6, rel=1e-9)

    def test_missing_weight_range(self):
        with pytest.raises(MissingFeature):
            physics_predict(make_record(weight_mid=None))

    def test_assist_level_halves_prediction(self):
        half = physics_predict(make_record(kind="ebike", assist=0.5, slope_pct=1.0),
                               device_mass_kg=25.0)
        full = physics_predict(make_record(kind="ebike", assist=1.0, slope_pct=1.0),
                               device_mass_kg=25.0)
        assert half == pytest.approx(0.5 * full, rel=1e-12)


class TestParams:
    @pytest.mark.parametrize("field", ["g", "c_r", "rho", "area", "c_d"])
    def test_positive_constants_enforced(self, field):
        with pytest.raises(ValueError):
            PhysicsParams(**{field: 0.0})

    def test_query_validation(self):
        with pytest.raises(ValueError):
            DemandQuery(0.0, 0.0, 10.0)
        with pytest.raises(ValueError):
            DemandQuery(80.0, 0.0, -1.0)
        with pytest.raises(ValueError):
            DemandQuery(80.0, 0.0, 10.0, assist_level=1.5)
