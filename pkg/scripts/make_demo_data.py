#!/usr/bin/env python3
"""Generate a small demo fleet: raw trip CSVs, soc events, calibration
points, and labelled record bundles, ready for the CLI walkthrough in the
README.

Usage: python scripts/make_demo_data.py [out_dir]
"""

from __future__ import annotations

import json
import math
import sys
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
sys.path.insert(0, str(Path(__file__).resolve().parent))

from tripenergy.battery import OcvCurve, ocv_voltage  # noqa: E402
from tripenergy.features import write_records_jsonl  # noqa: E402
from tripenergy.rng import make_rng  # noqa: E402
from tripenergy.telemetry import COMPASS_ROSE  # noqa: E402

DEG_PER_M = 180.0 / (math.pi * 6_371_000.0)
CELL = OcvCurve(3.5, 0.7, -0.01, 0.15, -0.05, cells_in_series=10)


def write_scooter_trip(path: Path, rng) -> None:
    t = datetime(2023, 10, 12, 13, 35, 24)
    lat, lon, alt, soc = 53.3916, -6.2637, 57.2, 97.0
    rows = ["timestamp,latitude,longitude,speed,altitude,soc,wind_speed,"
            "wind_direction,weather"]
    direction = COMPASS_ROSE[int(rng.integers(0, 16))]
    for i in range(240):
        speed = max(0.0, float(rng.normal(16.0, 5.0)))
        lat += speed / 3.6 * 5.0 * DEG_PER_M  # 5 s between fixes
        alt += float(rng.normal(0.02, 0.3))
        if i % 40 == 39:
            soc -= 1.0
        rows.append(f"{t:%d/%m/%Y %H:%M:%S},{lat:.6f},{lon:.6f},{speed:.4f},"
                    f"{alt:.4f},{soc:.0f},3,{direction},Dry")
        t += timedelta(seconds=5)
    path.write_text("\n".join(rows) + "\n")


def write_ebike_trip(path: Path, events_path: Path, rng) -> None:
    t = datetime(2023, 7, 6, 9, 4, 23)
    lat, lon, alt = 53.3854, -6.2564, 56.8
    rows = ["timestamp,latitude,longitude,altitude,speed,wind_speed,"
            "wind_direction,weather,temperature"]
    events = ["timestamp,soc"]
    soc = 88.0
    for i in range(600):
        speed = max(0.0, float(rng.normal(18.0, 4.0)))
        lat += speed / 3.6 * DEG_PER_M  # 1 Hz fixes
        alt += float(rng.normal(0.01, 0.2))
        rows.append(f"{t:%d/%m/%Y %H:%M:%S},{lat:.6f},{lon:.6f},{alt:.4f},"
                    f"{speed:.1f},16.9,S,Cloudy,16")
        if i % 120 == 0:
            events.append(f"{t:%d/%m/%Y %H:%M:%S},{soc:.0f}")
            soc -= 1.0
        t += timedelta(seconds=1)
    path.write_text("\n".join(rows) + "\n")
    events_path.write_text("\n".join(events) + "\n")


def write_ocv_points(path: Path) -> None:
    rows = ["soc,voltage"]
    for soc in np.linspace(0.05, 0.95, 40):
        rows.append(f"{soc:.4f},{ocv_voltage(CELL, soc):.6f}")
    path.write_text("\n".join(rows) + "\n")


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_data")
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = make_rng(2024)

    write_scooter_trip(out_dir / "escooter_trip.csv", rng)
    write_ebike_trip(out_dir / "ebike_trip.csv",
                     out_dir / "ebike_soc_events.csv", rng)
    write_ocv_points(out_dir / "ocv_points.csv")

    # a ready-made record bundle for dataset/train/eval without labelling
    # every trip by hand
    from run_synthetic_benchmark import make_records  # noqa: E402
    write_records_jsonl(make_records("escooter", 300, seed=7),
                        out_dir / "escooter_records.jsonl")

    manifest = {p.name: p.stat().st_size for p in sorted(out_dir.iterdir())}
    print(json.dumps(manifest, indent=2))
    print(f"demo data written to {out_dir}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
