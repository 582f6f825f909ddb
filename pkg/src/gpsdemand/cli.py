"""Pipeline command-line interface.

Each subcommand runs one stage, reading prior-stage artifacts from the
output directory and writing its own plus a JSON manifest with input
digests and parameters. Exit codes: 0 success, 2 config error, 3 missing
upstream artifact, 4 data error.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import sys

import click
import pandas as pd

from . import forecast as fc
from . import homes as homes_mod
from . import matrices, quality, synth, tripdist, tripgen, trips as trips_mod
from .config import ConfigError, PipelineConfig, load_config
from .domain import DAY_TYPES, GravityModel, RegressionModel
from .ingest import (
    IngestError,
    load_population,
    load_sea,
    load_zones,
    read_pings_table,
    zones_to_geojson,
)
from .timeutil import observed_day_counts


def _log(msg: str):
    print(msg, file=sys.stderr)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_csv(df: pd.DataFrame, path: str):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")


def _write_json(obj, path: str):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(text: str, path: str):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _write_manifest(cfg: PipelineConfig, stage: str, params: dict, inputs: list, outputs: list):
    manifest = {
        "stage": stage,
        "seed": cfg.seed,
        "params": params,
        "inputs": {os.path.relpath(p, cfg.output_dir) if p.startswith(cfg.output_dir) else p: _sha256(p) for p in sorted(inputs)},
        "outputs": {os.path.relpath(p, cfg.output_dir): _sha256(p) for p in sorted(outputs)},
    }
    _write_json(manifest, os.path.join(cfg.output_dir, "manifests", f"{stage}.json"))


def _require(path: str, stage: str) -> str:
    """Resolve a prior-stage artifact; exit 3 when it is absent."""
    if not os.path.exists(path):
        raise StageDependencyError(f"missing artifact for stage '{stage}': {path}")
    return path


class StageDependencyError(Exception):
    pass


def _out(cfg: PipelineConfig, *parts) -> str:
    return os.path.join(cfg.output_dir, *parts)


def _pings_path(cfg: PipelineConfig) -> str:
    return cfg.paths.pings or _out(cfg, "pings.csv")


def _zones_path(cfg: PipelineConfig) -> str:
    return cfg.paths.zones or _out(cfg, "zones.geojson")


def _population_path(cfg: PipelineConfig) -> str:
    return cfg.paths.population or _out(cfg, "population.csv")


def _sea_path(cfg: PipelineConfig, year: int) -> str:
    sea = cfg.paths.sea or {}
    return str(sea.get(str(year), sea.get(year, ""))) or _out(cfg, f"sea_{year}.csv")


def _load_zone_index(cfg: PipelineConfig, stage: str):
    path = _require(_zones_path(cfg), stage)
    with open(path) as fh:
        zones, index = load_zones(fh.read())
    return path, zones, index


# ---------------------------------------------------------------------------
# stages


def stage_synth(cfg: PipelineConfig) -> list:
    scfg = synth.SynthConfig(
        seed=cfg.seed,
        timezone=cfg.timezone,
        base_year=cfg.tripgen.base_year,
        forecast_years=tuple(cfg.forecast.years),
        **dataclasses.asdict(cfg.synth),
    )
    result = synth.generate_traces(scfg)
    outputs = []

    p = _out(cfg, "pings.csv")
    _write_csv(result.pings.to_dataframe(), p)
    outputs.append(p)

    p = _out(cfg, "zones.geojson")
    _write_json(zones_to_geojson(result.zones), p)
    outputs.append(p)

    p = _out(cfg, "population.csv")
    _write_csv(
        pd.DataFrame(
            sorted(result.population.items()), columns=["county_id", "population"]
        ),
        p,
    )
    outputs.append(p)

    for year, df in sorted(result.sea_by_year.items()):
        p = _out(cfg, f"sea_{year}.csv")
        _write_csv(df, p)
        outputs.append(p)

    for name, df in (
        ("homes", result.truth_homes),
        ("stays", result.truth_stays),
        ("trips", result.truth_trips),
    ):
        p = _out(cfg, "truth", f"{name}.csv")
        _write_csv(df, p)
        outputs.append(p)
    for day_type, odm in sorted(result.truth_odm.items()):
        p = _out(cfg, "truth", f"odm_{day_type}.csv")
        _write_csv(matrices.odm_to_dataframe(odm), p)
        outputs.append(p)
    p = _out(cfg, "truth", "meta.json")
    _write_json(
        {
            "beta_star": result.beta_star,
            "observed_days": result.observed_days,
            "devices": len(result.device_weights),
            "pings": len(result.pings),
        },
        p,
    )
    outputs.append(p)
    _log(f"synth: {len(result.device_weights)} devices, {len(result.pings)} pings")
    _write_manifest(cfg, "synth", dataclasses.asdict(cfg.synth), [], outputs)
    return outputs


def stage_ingest(cfg: PipelineConfig) -> list:
    pings_path = _require(_pings_path(cfg), "ingest")
    zones_path, zones, _ = _load_zone_index(cfg, "ingest")
    table, report = read_pings_table(pings_path, cfg.paths.pings_format)
    outputs = []
    p = _out(cfg, "ingest", "pings_clean.csv")
    _write_csv(table.to_dataframe(), p)
    outputs.append(p)
    p = _out(cfg, "ingest", "reject_report.json")
    _write_json(report.to_dict(), p)
    outputs.append(p)
    p = _out(cfg, "ingest", "zones_summary.json")
    _write_json(
        {
            "zones": len(zones),
            "counties": len({z.county_id for z in zones}),
        },
        p,
    )
    outputs.append(p)
    _log(f"ingest: {report.accepted}/{report.total} pings accepted, {len(zones)} zones")
    _write_manifest(
        cfg,
        "ingest",
        {"format": cfg.paths.pings_format},
        [pings_path, zones_path],
        outputs,
    )
    return outputs


def stage_quality(cfg: PipelineConfig) -> list:
    clean = _require(_out(cfg, "ingest", "pings_clean.csv"), "quality")
    table, _ = read_pings_table(clean)
    accurate = quality.filter_accuracy(table, cfg.quality.max_error_m)
    qm = quality.build_quality_matrix(
        accurate, year=cfg.tripgen.base_year, tz=cfg.timezone, d_max=cfg.quality.d_max
    )
    retained_ids, retained, shares = quality.filter_users(
        accurate, cfg.quality.min_bins, cfg.quality.min_days, cfg.timezone
    )
    outputs = []
    p = _out(cfg, "quality", "quality_matrix.csv")
    _write_csv(qm.to_dataframe(), p)
    outputs.append(p)
    p = _out(cfg, "quality", "pings_retained.csv")
    _write_csv(retained.to_dataframe(), p)
    outputs.append(p)
    p = _out(cfg, "quality", "retention.json")
    _write_json(
        {
            "input_pings": len(table),
            "accurate_pings": len(accurate),
            "retained_users": len(retained_ids),
            "retained_pings": len(retained),
            "user_share": shares["user_share"],
            "ping_share": shares["ping_share"],
        },
        p,
    )
    outputs.append(p)
    _log(
        f"quality: kept {len(retained_ids)} users "
        f"({100 * shares['user_share']:.1f}%), {len(retained)} pings "
        f"({100 * shares['ping_share']:.1f}%)"
    )
    _write_manifest(cfg, "quality", dataclasses.asdict(cfg.quality), [clean], outputs)
    return outputs


def stage_homes(cfg: PipelineConfig) -> list:
    retained = _require(_out(cfg, "quality", "pings_retained.csv"), "homes")
    zones_path, zones, index = _load_zone_index(cfg, "homes")
    pop_path = _require(_population_path(cfg), "homes")
    table, _ = read_pings_table(retained)
    estimates, no_night = homes_mod.detect_homes(
        table, cfg.timezone, cfg.home.bandwidth_m, index
    )
    population = load_population(pop_path)
    rep = homes_mod.compute_representativeness(estimates, population)
    weights, diag = homes_mod.compute_weights(estimates, rep)
    outputs = []
    p = _out(cfg, "homes", "homes.csv")
    _write_csv(homes_mod.homes_to_dataframe(estimates), p)
    outputs.append(p)
    p = _out(cfg, "homes", "representativeness.csv")
    _write_csv(homes_mod.representativeness_to_dataframe(rep), p)
    outputs.append(p)
    p = _out(cfg, "homes", "representativeness.geojson")
    _write_json(homes_mod.representativeness_to_geojson(rep, zones), p)
    outputs.append(p)
    p = _out(cfg, "homes", "weights.csv")
    _write_csv(
        pd.DataFrame(sorted(weights.items()), columns=["device_id", "weight"]), p
    )
    outputs.append(p)
    p = _out(cfg, "homes", "homes_meta.json")
    _write_json(
        {
            "devices_with_home": len(estimates),
            "devices_without_night_pings": len(no_night),
            "weighted_devices": len(weights),
            **diag,
        },
        p,
    )
    outputs.append(p)
    _log(f"homes: {len(estimates)} homes detected, {len(weights)} devices weighted")
    _write_manifest(
        cfg,
        "homes",
        dataclasses.asdict(cfg.home),
        [retained, zones_path, pop_path],
        outputs,
    )
    return outputs


def stage_trips(cfg: PipelineConfig) -> list:
    retained = _require(_out(cfg, "quality", "pings_retained.csv"), "trips")
    weights_path = _require(_out(cfg, "homes", "weights.csv"), "trips")
    table, _ = read_pings_table(retained)
    stays, trips = trips_mod.extract_trips(
        table,
        tz=cfg.timezone,
        dist_m=cfg.stay.dist_m,
        min_stay_s=cfg.stay.min_stay_s,
        max_gap_s=cfg.stay.max_gap_s,
    )
    wdf = pd.read_csv(weights_path, dtype={"device_id": str})
    weights = dict(zip(wdf["device_id"], wdf["weight"].astype(float)))
    weighted, excluded = trips_mod.apply_weights(trips, weights)
    outputs = []
    p = _out(cfg, "trips", "stays.csv")
    _write_csv(trips_mod.stays_to_dataframe(stays), p)
    outputs.append(p)
    p = _out(cfg, "trips", "trips.csv")
    _write_csv(trips_mod.trips_to_dataframe(weighted), p)
    outputs.append(p)
    p = _out(cfg, "trips", "trips_meta.json")
    _write_json(
        {
            "stays": len(stays),
            "trips_detected": len(trips),
            "trips_weighted": len(weighted),
            "trips_excluded_unweighted": excluded,
        },
        p,
    )
    outputs.append(p)
    _log(f"trips: {len(stays)} stays, {len(weighted)} weighted trips ({excluded} dropped)")
    _write_manifest(
        cfg, "trips", dataclasses.asdict(cfg.stay), [retained, weights_path], outputs
    )
    return outputs


def stage_odm(cfg: PipelineConfig) -> list:
    trips_path = _require(_out(cfg, "trips", "trips.csv"), "odm")
    retained = _require(_out(cfg, "quality", "pings_retained.csv"), "odm")
    zones_path, _, index = _load_zone_index(cfg, "odm")
    df = pd.read_csv(trips_path, dtype={"device_id": str})
    if df.empty:
        raise ValueError("no weighted trips to aggregate")
    ping_table, _ = read_pings_table(retained)
    observed = observed_day_counts(ping_table.ts, cfg.timezone)
    outputs = []
    meta = {"observed_days": observed}
    for day_type in DAY_TYPES:
        days = observed.get(day_type, 0)
        odm, diag = matrices.build_odm(
            df, index, day_type, cfg.tripgen.base_year, days
        )
        sub = df[df["day_type"] == day_type]
        cost = matrices.build_cost_matrix(
            sub, index, cfg.cost.stat, cfg.cost.metric
        )
        p = _out(cfg, "odm", f"odm_{day_type}.csv")
        _write_csv(matrices.odm_to_dataframe(odm), p)
        outputs.append(p)
        p = _out(cfg, "odm", f"cost_{day_type}.csv")
        _write_csv(matrices.cost_to_dataframe(cost), p)
        outputs.append(p)
        meta[day_type] = {
            **diag,
            "total_trips_per_day": float(odm.cells.sum()),
            "observed_cost_cells": int(cost.observed_mask.sum()),
        }
        _log(
            f"odm[{day_type}]: {odm.cells.sum():.1f} trips/typical day over "
            f"{days} days, {int(cost.observed_mask.sum())} observed cost cells"
        )
    p = _out(cfg, "odm", "odm_meta.json")
    _write_json(meta, p)
    outputs.append(p)
    _write_manifest(
        cfg,
        "odm",
        {"stat": cfg.cost.stat, "metric": cfg.cost.metric, "base_year": cfg.tripgen.base_year},
        [trips_path, retained, zones_path],
        outputs,
    )
    return outputs


def stage_calibrate(cfg: PipelineConfig) -> list:
    zones_path, zones, index = _load_zone_index(cfg, "calibrate")
    zone_ids = tuple(z.zone_id for z in index.zones)
    outputs = []
    inputs = [zones_path]
    for day_type in DAY_TYPES:
        odm_path = _require(_out(cfg, "odm", f"odm_{day_type}.csv"), "calibrate")
        cost_path = _require(_out(cfg, "odm", f"cost_{day_type}.csv"), "calibrate")
        inputs += [odm_path, cost_path]
        odm = matrices.odm_from_dataframe(
            pd.read_csv(odm_path), zone_ids, day_type, cfg.tripgen.base_year
        )
        cost = matrices.cost_from_dataframe(
            pd.read_csv(cost_path), zone_ids, cfg.cost.stat, cfg.cost.metric
        )
        model = tripdist.calibrate_beta(
            odm.production,
            odm.attraction,
            cost.cells,
            odm,
            beta_range=(cfg.calibrate.beta_start, cfg.calibrate.beta_stop),
            step=cfg.calibrate.beta_step,
            stat=cfg.cost.stat,
            metric=cfg.cost.metric,
            day_type=day_type,
        )
        p = _out(cfg, "calibrate", f"calibration_{day_type}.csv")
        _write_csv(tripdist.calibration_to_dataframe(model), p)
        outputs.append(p)
        p = _out(cfg, "calibrate", f"gravity_{day_type}.json")
        _write_json(model.to_dict(), p)
        outputs.append(p)
        _log(f"calibrate[{day_type}]: beta = {model.beta:.1f}")
    _write_manifest(
        cfg, "calibrate", dataclasses.asdict(cfg.calibrate), inputs, outputs
    )
    return outputs


def _covariate_table(cfg: PipelineConfig, zones, year: int, stage: str):
    sea_path = _require(_sea_path(cfg, year), stage)
    records, rejected = load_sea(sea_path, year)
    areas = {z.zone_id: _zone_area(z) for z in zones}
    table, excluded = tripgen.normalize_sea(records, areas)
    return sea_path, table, excluded, len(rejected)


def _zone_area(zone) -> float:
    from . import geo

    return abs(geo.polygon_area_km2(zone.outer, zone.holes))


def stage_fit_gen(cfg: PipelineConfig) -> list:
    zones_path, zones, index = _load_zone_index(cfg, "fit-gen")
    zone_ids = tuple(z.zone_id for z in index.zones)
    base_year = cfg.tripgen.base_year
    sea_path, table, excluded, rejected = _covariate_table(cfg, zones, base_year, "fit-gen")
    screen = tripgen.correlation_screen(
        table, cfg.tripgen.corr_threshold, tuple(cfg.tripgen.drop_priority)
    )
    covariates = [c for c in screen.kept(table.columns) if c not in screen.constant]
    inputs = [zones_path, sea_path]
    outputs = []
    models = []
    for day_type in DAY_TYPES:
        odm_path = _require(_out(cfg, "odm", f"odm_{day_type}.csv"), "fit-gen")
        inputs.append(odm_path)
        odm = matrices.odm_from_dataframe(
            pd.read_csv(odm_path), zone_ids, day_type, base_year
        )
        marg = {
            "production": pd.Series(odm.production, index=list(zone_ids)),
            "attraction": pd.Series(odm.attraction, index=list(zone_ids)),
        }
        common = table.index.intersection(list(zone_ids))
        X = table.loc[common, covariates].to_numpy(dtype=float)
        for direction in ("production", "attraction"):
            y = marg[direction].loc[common].to_numpy()
            models.append(
                tripgen.fit_ols(
                    X, y, names=covariates, day_type=day_type, direction=direction
                )
            )
    outputs_meta = {
        "covariates": covariates,
        "dropped": screen.dropped,
        "constant": screen.constant,
        "flagged_pairs": [[a, b, r] for a, b, r in screen.flagged],
        "zones_excluded_zero_population": excluded,
        "sea_rows_rejected": rejected,
    }
    p = _out(cfg, "tripgen", "models.json")
    _write_json({"models": [m.to_dict() for m in models]}, p)
    outputs.append(p)
    p = _out(cfg, "tripgen", "models.csv")
    _write_csv(tripgen.models_to_dataframe(models), p)
    outputs.append(p)
    p = _out(cfg, "tripgen", "models_report.txt")
    _write_text(tripgen.models_report(models), p)
    outputs.append(p)
    p = _out(cfg, "tripgen", "screening.json")
    _write_json(outputs_meta, p)
    outputs.append(p)
    p = _out(cfg, "tripgen", f"covariates_{base_year}.csv")
    _write_csv(table.reset_index(), p)
    outputs.append(p)
    for m in models:
        _log(
            f"fit-gen[{m.direction} {m.day_type}]: adj R^2 = {m.adj_r2:.3f} "
            f"(n = {m.n_obs})"
        )
    _write_manifest(cfg, "fit-gen", dataclasses.asdict(cfg.tripgen), inputs, outputs)
    return outputs


def stage_forecast(cfg: PipelineConfig) -> list:
    zones_path, zones, index = _load_zone_index(cfg, "forecast")
    zone_ids = tuple(z.zone_id for z in index.zones)
    models_path = _require(_out(cfg, "tripgen", "models.json"), "forecast")
    with open(models_path) as fh:
        models_doc = json.load(fh)
    models = {}
    for d in models_doc["models"]:
        m = RegressionModel.from_dict(d)
        models[(m.direction, m.day_type)] = m

    years = sorted(set(cfg.forecast.years) | {cfg.tripgen.base_year})
    inputs = [zones_path, models_path]
    sea_by_year = {}
    for year in years:
        sea_path, table, _, _ = _covariate_table(cfg, zones, year, "forecast")
        inputs.append(sea_path)
        sea_by_year[year] = table
    fs = fc.forecast_generation(models, sea_by_year)

    outputs = []
    p = _out(cfg, "forecast", "forecast_generation.csv")
    _write_csv(fs.to_dataframe(), p)
    outputs.append(p)

    growth = {}
    for day_type in DAY_TYPES:
        for kind in ("production", "attraction"):
            for (y0, y1), g in sorted(fs.decadal_growth(day_type, kind).items()):
                growth[f"{day_type}.{kind}.{y0}-{y1}"] = g
    p = _out(cfg, "forecast", "growth.json")
    _write_json(
        {
            "decadal_growth": growth,
            "totals": {
                f"{y}.{dt}": fs.totals[(y, dt)] for y, dt in sorted(fs.totals)
            },
        },
        p,
    )
    outputs.append(p)

    zone_to_county = {z.zone_id: z.county_id for z in index.zones}
    for day_type in DAY_TYPES:
        cost_path = _require(_out(cfg, "odm", f"cost_{day_type}.csv"), "forecast")
        gravity_path = _require(
            _out(cfg, "calibrate", f"gravity_{day_type}.json"), "forecast"
        )
        inputs += [cost_path, gravity_path]
        cost = matrices.cost_from_dataframe(
            pd.read_csv(cost_path), zone_ids, cfg.cost.stat, cfg.cost.metric
        )
        with open(gravity_path) as fh:
            gravity = GravityModel.from_dict(json.load(fh))
        odms = fc.forecast_distribution(fs, cost, gravity, day_type)
        for year, odm in sorted(odms.items()):
            p = _out(cfg, "forecast", f"odm_forecast_{year}_{day_type}.csv")
            _write_csv(matrices.odm_to_dataframe(odm), p)
            outputs.append(p)
            county = fc.aggregate_flows(odm, zone_to_county)
            p = _out(cfg, "forecast", f"county_flows_{year}_{day_type}.csv")
            _write_csv(matrices.odm_to_dataframe(county), p)
            outputs.append(p)
        first, last = min(odms), max(odms)
        if first != last:
            absolute, percent = fc.flow_change(odms[first], odms[last])
            p = _out(cfg, "forecast", f"flow_change_{first}_{last}_{day_type}.csv")
            _write_csv(fc.change_to_dataframe(zone_ids, absolute, percent), p)
            outputs.append(p)
        _log(
            f"forecast[{day_type}]: years {first}-{last}, "
            f"base total {odms[first].cells.sum():.1f} trips/day"
        )
    _write_manifest(
        cfg, "forecast", {"years": list(cfg.forecast.years)}, inputs, outputs
    )
    return outputs


def stage_compare(cfg: PipelineConfig) -> list:
    if not cfg.compare.predicted or not cfg.compare.reference:
        raise ConfigError("compare.predicted and compare.reference paths are required")
    pred_path = _require(cfg.compare.predicted, "compare")
    ref_path = _require(cfg.compare.reference, "compare")
    key = cfg.compare.key
    pred_df = pd.read_csv(pred_path)
    ref_df = pd.read_csv(ref_path)
    for df, col, path in (
        (pred_df, cfg.compare.predicted_column, pred_path),
        (ref_df, cfg.compare.reference_column, ref_path),
    ):
        if key not in df.columns or col not in df.columns:
            raise ValueError(f"{path} lacks columns {key!r}/{col!r}")
    pred = pred_df.groupby(key)[cfg.compare.predicted_column].sum()
    ref = ref_df.groupby(key)[cfg.compare.reference_column].sum()
    common = pred.index.intersection(ref.index)
    report = fc.compare_models(pred.loc[common], ref.loc[common])
    outputs = []
    p = _out(cfg, "compare", "comparison.csv")
    _write_csv(
        pd.DataFrame(
            {
                key: common,
                "predicted": pred.loc[common].to_numpy(),
                "reference": ref.loc[common].to_numpy(),
                "ratio": report.ratios.to_numpy(),
            }
        ),
        p,
    )
    outputs.append(p)
    p = _out(cfg, "compare", "comparison_summary.txt")
    _write_text(report.summary(), p)
    outputs.append(p)
    _log(f"compare: rho = {report.rho:.3f}, slope = {report.slope:.3f}")
    _write_manifest(
        cfg,
        "compare",
        dataclasses.asdict(cfg.compare),
        [pred_path, ref_path],
        outputs,
    )
    return outputs


def stage_report(cfg: PipelineConfig) -> list:
    manifest_dir = _out(cfg, "manifests")
    if not os.path.isdir(manifest_dir):
        raise StageDependencyError(
            "missing artifact for stage 'report': no manifests found; run prior stages first"
        )
    lines = ["pipeline report", "===============", ""]
    for name in sorted(os.listdir(manifest_dir)):
        if not name.endswith(".json") or name == "report.json":
            continue
        with open(os.path.join(manifest_dir, name)) as fh:
            manifest = json.load(fh)
        lines.append(f"stage {manifest['stage']}: {len(manifest['outputs'])} artifacts")
    lines.append("")
    for rel, title in (
        (("quality", "retention.json"), "retention"),
        (("trips", "trips_meta.json"), "trips"),
        (("odm", "odm_meta.json"), "odm"),
        (("forecast", "growth.json"), "forecast growth"),
    ):
        path = _out(cfg, *rel)
        if os.path.exists(path):
            with open(path) as fh:
                doc = json.load(fh)
            lines.append(f"{title}:")
            lines.append(json.dumps(doc, indent=2, sort_keys=True))
            lines.append("")
    for day_type in DAY_TYPES:
        path = _out(cfg, "calibrate", f"gravity_{day_type}.json")
        if os.path.exists(path):
            with open(path) as fh:
                doc = json.load(fh)
            lines.append(
                f"gravity[{day_type}]: beta = {doc['beta']} "
                f"({doc['stat']} {doc['metric']})"
            )
    lines.append("")
    text = "\n".join(lines)
    p = _out(cfg, "report.txt")
    _write_text(text, p)
    _log(f"report: wrote {p}")
    _write_manifest(cfg, "report", {}, [], [p])
    return [p]


_STAGES = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "quality": stage_quality,
    "homes": stage_homes,
    "trips": stage_trips,
    "odm": stage_odm,
    "fit-gen": stage_fit_gen,
    "calibrate": stage_calibrate,
    "forecast": stage_forecast,
    "compare": stage_compare,
    "report": stage_report,
}


def run(subcommand: str, config: PipelineConfig) -> int:
    """Run one pipeline stage; returns the process exit code."""
    fn = _STAGES.get(subcommand)
    if fn is None:
        _log(f"unknown stage: {subcommand}")
        return 2
    try:
        fn(config)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return 2
    except StageDependencyError as exc:
        _log(str(exc))
        return 3
    except FileNotFoundError as exc:
        _log(f"missing input: {exc}")
        return 3
    except (IngestError, ValueError, KeyError) as exc:
        _log(f"data error in stage '{subcommand}': {exc}")
        return 4
    return 0


def _make_command(name: str):
    @click.command(name=name, help=f"Run the {name} stage.")
    @click.option("--config", "-c", "config_path", type=click.Path(), default=None,
                  help="TOML configuration file.")
    @click.option("--output-dir", "-o", default=None, help="Override output directory.")
    @click.option("--seed", type=int, default=None, help="Override the RNG seed.")
    @click.option("--timezone", default=None, help="Override the local timezone.")
    def cmd(config_path, output_dir, seed, timezone):
        try:
            cfg = load_config(
                path=config_path,
                overrides={"output_dir": output_dir, "seed": seed, "timezone": timezone},
            )
        except (ConfigError, OSError, ValueError) as exc:
            _log(f"config error: {exc}")
            sys.exit(2)
        sys.exit(run(name, cfg))

    return cmd


@click.group(help="GPS travel-demand pipeline: run stages against one TOML config.")
def main():
    pass


for _name in _STAGES:
    main.add_command(_make_command(_name))


if __name__ == "__main__":
    main()
