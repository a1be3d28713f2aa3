"""Single entry point for the full pipeline.

Subcommands: ingest, label, fit-ocv, dataset, train, eval, predict, synth,
plot, baseline. A TOML or JSON config file can pre-set physics constants,
device masses, hyperparameters, and the seed; explicit flags always win.
Exit codes: 0 success, 1 validation error, 2 I/O error. Output files are
written atomically (temp + rename), so interrupted runs never leave
half-written artifacts.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import battery, evaluation, features, models, physics, synth, telemetry
from .tripmetrics import DEFAULT_SMOOTHING_WINDOW, summarize

DEFAULT_CAPACITY_WH = {"ebike": 450.0, "escooter": 446.0}
DEFAULT_DISCRETE_COLUMNS = ("weather_code", "wind_we", "wind_ns")


class MissingSoc(ValueError):
    """Plot requested a soc series from a trace that has none."""


def _atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require_exists(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise FileNotFoundError(f"input path does not exist: {p}")


def _load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    _require_exists(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    return json.loads(path.read_text())


def _merged(flag_value, config: dict, key: str, default=None):
    """Explicit flag beats config beats default."""
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def _physics_from(args, config: dict) -> physics.PhysicsParams:
    block = config.get("physics", {})
    defaults = physics.PhysicsParams()
    return physics.PhysicsParams(
        g=_merged(args.g, block, "g", defaults.g),
        c_r=_merged(args.c_r, block, "c_r", defaults.c_r),
        rho=_merged(args.rho, block, "rho", defaults.rho),
        area=_merged(args.area, block, "area", defaults.area),
        c_d=_merged(args.c_d, block, "c_d", defaults.c_d),
    )


def _seed_from(args, config: dict) -> int:
    seed = _merged(getattr(args, "seed", None), config, "seed")
    if seed is None:
        raise ValueError("a seed is required (pass --seed or set it in the config)")
    return int(seed)


def _parse_range(text: str, flag: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"{flag} expects LOW:HIGH, got {text!r}")
    return float(parts[0]), float(parts[1])


def _read_records(paths) -> list[features.TripRecord]:
    records: list[features.TripRecord] = []
    for p in paths:
        p = Path(p)
        _require_exists(p)
        if p.suffix == ".jsonl":
            records.extend(features.read_records_jsonl(p))
        else:
            records.append(features.TripRecord.from_json(json.loads(p.read_text())))
    if not records:
        raise ValueError("no trip records found in the given inputs")
    return records


# --- subcommands ---

def cmd_ingest(args) -> int:
    _require_exists(args.csv, args.align_soc)
    trace = telemetry.parse_trip_csv(args.csv, args.kind)
    if args.align_soc:
        events = telemetry.parse_soc_events_csv(args.align_soc)
        trace = telemetry.align_soc_events(trace, events)
    updates = {}
    if args.assist_level is not None:
        updates["assist_level"] = args.assist_level
    if args.voltage_endpoints is not None:
        updates["voltage_endpoints"] = _parse_range(args.voltage_endpoints,
                                                    "--voltage-endpoints")
    if args.height_range is not None or args.weight_range is not None:
        if args.height_range is None or args.weight_range is None:
            raise ValueError("--height-range and --weight-range go together")
        updates["rider"] = telemetry.RiderProfile(
            height_range=_parse_range(args.height_range, "--height-range"),
            weight_range=_parse_range(args.weight_range, "--weight-range"),
        )
    if updates:
        trace = replace(trace, **updates)
    for warning in telemetry.validate_trace(trace):
        print(f"warning [{warning.code}]: {warning.message}", file=sys.stderr)
    _atomic_write_text(args.out,
                       json.dumps(telemetry.trace_to_json(trace), indent=2) + "\n")
    print(f"wrote {len(trace.samples)}-sample {trace.kind} trace to {args.out}")
    return 0


def cmd_label(args) -> int:
    config = _load_config(args.config)
    _require_exists(args.trace, args.ocv_curve)
    trace = telemetry.read_trace_json(args.trace)
    summary = summarize(trace, smoothing_window=args.smoothing_window,
                        odometer_km=args.odometer_km)
    capacity = _merged(args.capacity_wh, config, "capacity_wh",
                       DEFAULT_CAPACITY_WH[trace.kind])

    if trace.kind == "escooter":
        spec = battery.BatterySpec(capacity_wh=capacity)
        first, last = trace.samples[0], trace.samples[-1]
        energy = battery.soc_drop_energy(first.soc, last.soc, spec)
    else:
        if trace.voltage_endpoints is None:
            raise ValueError("e-bike labelling needs voltage endpoints on the trace "
                             "(ingest with --voltage-endpoints)")
        if args.ocv_curve is None:
            raise ValueError("e-bike labelling needs --ocv-curve")
        curve = battery.read_curve_json(args.ocv_curve)
        spec = battery.BatterySpec(capacity_wh=capacity,
                                   cells_in_series=curve.cells_in_series)
        v_start, v_end = trace.voltage_endpoints
        energy = battery.trip_energy(v_start, v_end, curve, spec)

    label = battery.energy_efficiency(energy, summary.distance_km)
    record = features.record_from_trace(trace, summary, label)
    _atomic_write_text(args.out, json.dumps(record.to_json(), indent=2) + "\n")
    print(f"labelled trip: {energy:.2f} Wh over {summary.distance_km:.3f} km "
          f"-> {label:.3f} Wh/km ({args.out})")
    return 0


def cmd_fit_ocv(args) -> int:
    _require_exists(args.points)
    points = battery.read_fit_points_csv(args.points)
    curve = battery.fit_ocv(points, cells_in_series=args.cells)
    _atomic_write_text(args.out, json.dumps(battery.curve_to_json(curve), indent=2) + "\n")
    ks = ", ".join(f"k{i}={k:.6g}" for i, k in enumerate(curve.coefficients))
    print(f"fitted curve ({ks}) on soc domain "
          f"[{curve.soc_domain[0]:.3f}, {curve.soc_domain[1]:.3f}] -> {args.out}")
    return 0


def cmd_dataset(args) -> int:
    records = _read_records(args.records)
    matrix, labels, schema = features.build_dataset(records, args.include_rider)
    out = Path(args.out)
    schema_path = Path(args.schema_out) if args.schema_out else out.with_suffix(".schema.json")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(list(schema.feature_names) + [features.LABEL_COLUMN])
    for row, label in zip(matrix, labels):
        writer.writerow([repr(float(v)) for v in row] + [repr(float(label))])
    _atomic_write_text(out, buf.getvalue())
    _atomic_write_text(schema_path, json.dumps(schema.to_json(), indent=2) + "\n")
    print(f"wrote {matrix.shape[0]} x {matrix.shape[1]} dataset to {out} "
          f"(schema: {schema_path})")
    return 0


def _dataset_schema_path(dataset_path: Path, flag_value) -> Path | None:
    if flag_value is not None:
        return Path(flag_value)
    candidate = dataset_path.with_suffix(".schema.json")
    return candidate if candidate.exists() else None


def cmd_train(args) -> int:
    config = _load_config(args.config)
    _require_exists(args.dataset)
    seed = _seed_from(args, config)
    matrix, labels, _ = features.read_dataset_csv(args.dataset)
    if labels is None:
        raise ValueError("training dataset is missing the label column")
    schema_path = _dataset_schema_path(Path(args.dataset), args.schema)
    fingerprint = ""
    if schema_path is not None:
        _require_exists(schema_path)
        fingerprint = features.read_schema_json(schema_path).fingerprint()
    overrides = config.get("hyperparams", {}).get(args.model)
    model = models.train(args.model, matrix, labels, hp=overrides, seed=seed,
                         schema_fingerprint=fingerprint)
    models.save_model(model, args.out)
    print(f"trained {args.model} on {matrix.shape[0]} rows (seed {seed}) -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args.config)
    seed = _seed_from(args, config)
    records = _read_records(args.records)
    kinds = [k.strip() for k in args.models.split(",")] if args.models else list(models.MODEL_KINDS)
    for kind in kinds:
        if kind not in models.MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
    spec = evaluation.SplitSpec(seed=seed)
    report = evaluation.run_grid(
        records, kinds, spec,
        hyperparams=config.get("hyperparams"),
        physics_params=_physics_from(args, config),
        device_mass_kg=_merged(args.device_mass, config, "device_mass_kg"),
    )
    print(report.to_text(), end="")
    if args.out:
        _atomic_write_text(args.out, json.dumps(report.to_json_obj(), indent=2) + "\n")
        print(f"wrote report to {args.out}")
    return 0


def cmd_predict(args) -> int:
    _require_exists(args.model, args.dataset)
    model = models.load_model(args.model)
    matrix, labels, _ = features.read_dataset_csv(args.dataset)
    schema_path = _dataset_schema_path(Path(args.dataset), args.schema)
    fingerprint = None
    if schema_path is not None:
        fingerprint = features.read_schema_json(schema_path).fingerprint()
    preds = models.predict(model, matrix, schema_fingerprint=fingerprint)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["prediction_wh_per_km"])
    for p in preds:
        writer.writerow([repr(float(p))])
    _atomic_write_text(args.out, buf.getvalue())
    line = f"wrote {len(preds)} predictions to {args.out}"
    if labels is not None:
        line += f" (MAE vs labels: {evaluation.mae(preds, labels):.4f} Wh/km)"
    print(line)
    return 0


def cmd_synth(args) -> int:
    config = _load_config(args.config)
    _require_exists(args.dataset)
    seed = _seed_from(args, config)
    matrix, labels, names = features.read_dataset_csv(args.dataset)
    if labels is not None:
        full = np.column_stack([matrix, labels])
        names = names + [features.LABEL_COLUMN]
    else:
        full = matrix
    if args.discrete is not None:
        discrete = [c.strip() for c in args.discrete.split(",") if c.strip()]
    else:
        discrete = [c for c in DEFAULT_DISCRETE_COLUMNS if c in names]
    model = synth.fit_copula(full, columns=names, discrete=discrete)
    generated = synth.sample(model, args.n, seed)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(names)
    for row in generated:
        writer.writerow([repr(float(v)) for v in row])
    _atomic_write_text(args.out, buf.getvalue())
    score = synth.quality_score(full, generated)
    print(f"wrote {args.n} synthetic rows to {args.out} (quality score: {score:.2f}%)")
    if args.model_out:
        _atomic_write_text(args.model_out,
                           json.dumps(synth.copula_to_json(model)) + "\n")
    return 0


def cmd_plot(args) -> int:
    _require_exists(args.trace)
    trace = telemetry.read_trace_json(args.trace)
    t0 = trace.samples[0].timestamp
    elapsed = [(s.timestamp - t0).total_seconds() for s in trace.samples]
    speed = [s.speed for s in trace.samples]
    soc = [s.soc for s in trace.samples]
    has_soc = all(v is not None for v in soc)

    want_speed = args.series in ("both", "speed")
    want_soc = args.series in ("both", "soc")
    if want_soc and not has_soc:
        if args.series == "soc":
            raise MissingSoc("trace has no soc values to plot")
        print("warning: trace has no soc values; plotting speed only",
              file=sys.stderr)
        want_soc = False

    out = Path(args.out)
    csv_path = out.with_suffix(".csv")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["elapsed_s", "speed_kmh", "soc_pct"])
    for i in range(len(elapsed)):
        writer.writerow([repr(float(elapsed[i])), repr(float(speed[i])),
                         "" if soc[i] is None else repr(float(soc[i]))])
    _atomic_write_text(csv_path, buf.getvalue())

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax_speed = plt.subplots(figsize=(9, 4))
    ax_speed.set_xlabel("elapsed time (s)")
    if want_speed:
        ax_speed.plot(elapsed, speed, color="tab:green", label="speed")
        ax_speed.set_ylabel("speed (km/h)", color="tab:green")
        ax_speed.tick_params(axis="y", labelcolor="tab:green")
    if want_soc:
        ax_soc = ax_speed.twinx()
        ax_soc.plot(elapsed, soc, color="tab:orange", label="SoC")
        ax_soc.set_ylabel("SoC (%)", color="tab:orange")
        ax_soc.tick_params(axis="y", labelcolor="tab:orange")
    ax_speed.set_title(f"{trace.kind} trip: speed"
                       + (" and SoC" if want_soc else "") + " over time")
    fig.tight_layout()
    svg = io.StringIO()
    fig.savefig(svg, format="svg")
    plt.close(fig)
    _atomic_write_text(out, svg.getvalue())
    print(f"wrote plot to {out} and series to {csv_path}")
    return 0


def cmd_baseline(args) -> int:
    config = _load_config(args.config)
    _require_exists(args.record)
    record = features.TripRecord.from_json(json.loads(Path(args.record).read_text()))
    params = _physics_from(args, config)
    device_mass = _merged(args.device_mass, config, "device_mass_kg")
    prediction = physics.physics_predict(record, params, device_mass_kg=device_mass)
    print(f"{prediction:.4f}")
    if args.out:
        _atomic_write_text(args.out, json.dumps(
            {"prediction_wh_per_km": prediction}, indent=2) + "\n")
    return 0


# --- parser ---

def _add_physics_flags(sub) -> None:
    sub.add_argument("--g", type=float, help="gravity, m/s^2")
    sub.add_argument("--c-r", dest="c_r", type=float,
                     help="rolling resistance coefficient")
    sub.add_argument("--rho", type=float, help="air density, kg/m^3")
    sub.add_argument("--area", type=float, help="frontal area, m^2")
    sub.add_argument("--c-d", dest="c_d", type=float, help="drag coefficient")
    sub.add_argument("--device-mass", type=float,
                     help="device curb mass, kg (default per vehicle kind)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripenergy",
        description="Energy-consumption labelling and prediction for "
                    "e-bike / e-scooter trips.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ingest", help="parse a trip CSV into a canonical trace JSON")
    p.add_argument("csv", help="trip CSV path")
    p.add_argument("--kind", required=True, choices=telemetry.KINDS,
                   help="vehicle kind (selects the CSV schema)")
    p.add_argument("--out", required=True, help="output trace JSON path")
    p.add_argument("--align-soc", help="timestamp,soc event CSV to step-align")
    p.add_argument("--assist-level", type=float,
                   help="e-bike assistance fraction in [0,1]")
    p.add_argument("--voltage-endpoints", metavar="VSTART:VEND",
                   help="e-bike pack voltages at trip start/end, volts")
    p.add_argument("--height-range", metavar="LOW:HIGH", help="rider height range, cm")
    p.add_argument("--weight-range", metavar="LOW:HIGH", help="rider weight range, kg")
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("label", help="summarize a trace and compute its Wh/km label")
    p.add_argument("trace", help="trace JSON path")
    p.add_argument("--out", required=True, help="output record JSON path")
    p.add_argument("--capacity-wh", type=float,
                   help="battery capacity, Wh (default 450 e-bike / 446 e-scooter)")
    p.add_argument("--ocv-curve", help="fitted curve JSON (e-bike voltage path)")
    p.add_argument("--odometer-km", type=float,
                   help="explicit odometer distance overriding the trajectory, km")
    p.add_argument("--smoothing-window", type=int, default=DEFAULT_SMOOTHING_WINDOW,
                   help="altitude moving-average window, samples")
    p.add_argument("--config", help="TOML/JSON config file")
    p.set_defaults(func=cmd_label)

    p = subs.add_parser("fit-ocv", help="least-squares fit of the cell voltage curve")
    p.add_argument("points", help="soc,voltage CSV (soc as fraction in (0,1))")
    p.add_argument("--cells", type=int, default=1, help="cells in series in the pack")
    p.add_argument("--out", required=True, help="output curve JSON path")
    p.set_defaults(func=cmd_fit_ocv)

    p = subs.add_parser("dataset", help="assemble record JSON(L) files into a dataset CSV")
    p.add_argument("records", nargs="+", help="record .json files or .jsonl bundles")
    p.add_argument("--out", required=True, help="output dataset CSV path")
    p.add_argument("--schema-out", help="schema sidecar path "
                                        "(default: <out>.schema.json)")
    rider = p.add_mutually_exclusive_group()
    rider.add_argument("--include-rider", dest="include_rider",
                       action="store_true", default=True,
                       help="include rider height/weight midpoints (default)")
    rider.add_argument("--no-rider", dest="include_rider", action="store_false",
                       help="drop rider features")
    p.set_defaults(func=cmd_dataset)

    p = subs.add_parser("train", help="train one model kind on a dataset CSV")
    p.add_argument("dataset", help="dataset CSV path")
    p.add_argument("--model", required=True, choices=models.MODEL_KINDS)
    p.add_argument("--seed", type=int, help="training seed (required here or in config)")
    p.add_argument("--schema", help="schema sidecar path (default: alongside dataset)")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--config", help="TOML/JSON config file (hyperparams block)")
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("eval", help="run the with/without-rider experiment grid")
    p.add_argument("records", nargs="+", help="record .json files or .jsonl bundles")
    p.add_argument("--seed", type=int, help="split/training seed")
    p.add_argument("--models", help="comma-separated model kinds (default: all)")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--config", help="TOML/JSON config file")
    _add_physics_flags(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("predict", help="predict Wh/km for the rows of a dataset CSV")
    p.add_argument("dataset", help="dataset CSV path (label column optional)")
    p.add_argument("--model", required=True, help="trained model JSON path")
    p.add_argument("--schema", help="schema sidecar path (default: alongside dataset)")
    p.add_argument("--out", required=True, help="output predictions CSV path")
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("synth", help="fit a Gaussian copula and sample synthetic rows")
    p.add_argument("dataset", help="dataset CSV path")
    p.add_argument("--n", type=int, required=True, help="rows to generate")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--out", required=True, help="output synthetic CSV path")
    p.add_argument("--model-out", help="optional copula model JSON path")
    p.add_argument("--discrete", help="comma-separated columns snapped to "
                                      "observed values (default: code columns)")
    p.add_argument("--config", help="TOML/JSON config file")
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("plot", help="emit an SVG + CSV of speed and SoC over time")
    p.add_argument("trace", help="trace JSON path")
    p.add_argument("--out", required=True, help="output SVG path "
                                                "(series CSV lands alongside)")
    p.add_argument("--series", choices=("both", "speed", "soc"), default="both")
    p.set_defaults(func=cmd_plot)

    p = subs.add_parser("baseline", help="physics baseline prediction for one record")
    p.add_argument("record", help="record JSON path")
    p.add_argument("--out", help="optional JSON output path")
    p.add_argument("--config", help="TOML/JSON config file")
    _add_physics_flags(p)
    p.set_defaults(func=cmd_baseline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, models.CorruptModelFile) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
