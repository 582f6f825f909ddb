"""Synthetic ping streams with planted ground truth.

Devices live on a rectangular zone grid, sleep at a home anchor, and make
round-trip excursions whose destinations follow a planted gravity law with a
known exponent. Output uses the exact ingest formats, so every pipeline stage
can be verified end to end without licensed data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import geo
from .domain import ODMatrix, Zone
from .ingest import PingTable, ZoneIndex
from .kernels import haversine_m
from .timeutil import classify_day_types


@dataclass
class SynthConfig:
    seed: int = 0
    grid_nx: int = 5
    grid_ny: int = 5
    cell_size_deg: float = 0.05
    origin_lon: float = -86.8
    origin_lat: float = 40.0
    counties: int = 5  # zone columns are striped into this many counties
    population_per_zone: int = 400
    population_spread: float = 0.5  # zone pops drawn uniformly within +-spread
    sampling_rate: float = 0.3
    n_days: int = 14
    start_date: str = "2021-06-07"  # a Monday
    timezone: str = "UTC"
    beta_star: float = 1.5
    excursion_rate: float = 1.2  # Poisson mean excursions per day (2 trips each)
    speed_mps: float = 15.0
    stay_duration_s: int = 1500
    travel_ping_interval_s: int = 120
    stay_ping_interval_s: int = 600
    home_ping_interval_s: int = 1200
    night_ping_interval_s: int = 3600
    noise_sigma_m: float = 10.0
    home_jitter_m: float = 25.0
    frac_low_accuracy: float = 0.05  # fraction of pings tagged with error > 50 m
    base_year: int = 2021
    forecast_years: tuple = (2015, 2025, 2035, 2045)
    decadal_growth: float = 0.04

    def validate(self):
        if not (0.0 < self.sampling_rate <= 1.0):
            raise ValueError("sampling_rate must be in (0, 1]")
        if self.noise_sigma_m < 0:
            raise ValueError("noise sigma must be nonnegative")
        if self.grid_nx * self.grid_ny == 0:
            raise ValueError("empty zone set")
        if not 0.0 <= self.population_spread < 1.0:
            raise ValueError("population_spread must be in [0, 1)")


@dataclass
class SynthResult:
    config: SynthConfig
    zones: list
    zone_index: ZoneIndex
    pings: PingTable
    population: dict  # county_id -> population
    sea_by_year: dict  # year -> DataFrame (zone_id-indexed raw SEA table)
    truth_homes: pd.DataFrame
    truth_stays: pd.DataFrame
    truth_trips: pd.DataFrame
    truth_odm: dict  # day_type -> ODMatrix (upscaled, per typical day)
    beta_star: float
    device_weights: dict  # device_id -> population upscale weight
    observed_days: dict  # day_type -> count


def _make_zones(cfg: SynthConfig):
    zones = []
    dx = cfg.cell_size_deg
    per_county = max(1, math.ceil(cfg.grid_nx / cfg.counties))
    for ix in range(cfg.grid_nx):
        for iy in range(cfg.grid_ny):
            x0 = cfg.origin_lon + ix * dx
            y0 = cfg.origin_lat + iy * dx
            ring = (
                (x0, y0),
                (x0 + dx, y0),
                (x0 + dx, y0 + dx),
                (x0, y0 + dx),
                (x0, y0),
            )
            zones.append(
                Zone(
                    zone_id=f"Z{ix:02d}{iy:02d}",
                    outer=ring,
                    holes=(),
                    centroid=(x0 + dx / 2, y0 + dx / 2),
                    county_id=f"C{ix // per_county}",
                )
            )
    return zones


def _meters_to_deg(dx_m, dy_m, ref_lat):
    k = math.pi / 180.0 * geo.EARTH_RADIUS_M
    return dx_m / (k * math.cos(math.radians(ref_lat))), dy_m / k


def generate_traces(config: SynthConfig) -> SynthResult:
    """Simulate device traces and return them with the planted ground truth."""
    cfg = config
    cfg.validate()
    zones = _make_zones(cfg)
    index = ZoneIndex(zones)
    zones = index.zones  # sorted by id
    n = len(zones)
    rng = np.random.default_rng(cfg.seed)

    cent_lon = np.asarray([z.centroid[0] for z in zones])
    cent_lat = np.asarray([z.centroid[1] for z in zones])
    dist = haversine_m(cent_lon[:, None], cent_lat[:, None], cent_lon[None, :], cent_lat[None, :])
    off = dist + np.where(np.eye(n, dtype=bool), np.inf, 0.0)
    half_nearest = off.min(axis=1) / 2.0
    planted_cost = dist.copy()
    np.fill_diagonal(planted_cost, half_nearest)

    # secondary intra-zonal anchor at the planted intrazonal distance
    intra_dx, intra_dy = np.empty(n), np.empty(n)
    for i in range(n):
        r = half_nearest[i] / math.sqrt(2.0)
        intra_dx[i], intra_dy[i] = _meters_to_deg(r, r, cent_lat[i])
    intra_lon = cent_lon + intra_dx
    intra_lat = cent_lat + intra_dy

    lo = 1.0 - cfg.population_spread
    hi = 1.0 + cfg.population_spread
    zone_pop = np.maximum(
        1, np.round(cfg.population_per_zone * rng.uniform(lo, hi, n))
    ).astype(np.int64)
    county_of_zone = [z.county_id for z in zones]
    population: dict = {}
    for c, p in zip(county_of_zone, zone_pop):
        population[c] = population.get(c, 0) + int(p)

    # destination-choice law: attraction = population, impedance^-beta*
    with np.errstate(divide="ignore"):
        choice_w = zone_pop[None, :] * np.exp(-cfg.beta_star * np.log(planted_cost))
    choice_p = choice_w / choice_w.sum(axis=1, keepdims=True)

    sampled_per_zone = rng.binomial(zone_pop, cfg.sampling_rate)
    sampled_per_county: dict = {c: 0 for c in population}
    for z_i in range(n):
        sampled_per_county[county_of_zone[z_i]] += int(sampled_per_zone[z_i])

    day_starts = (
        pd.date_range(cfg.start_date, periods=cfg.n_days, freq="D", tz=cfg.timezone)
        .tz_convert("UTC")
        .asi8
        // 1_000_000_000
    )
    observed_days_arr = classify_day_types(day_starts + 12 * 3600, cfg.timezone)
    observed_days = {
        "weekday": int((~observed_days_arr).sum()),
        "weekend": int(observed_days_arr.sum()),
    }

    all_dev, all_lon, all_lat, all_ts = [], [], [], []
    homes_rows, stay_rows, trip_rows = [], [], []
    device_weights: dict = {}
    device_no = 0
    for z_i in range(n):
        for _ in range(int(sampled_per_zone[z_i])):
            device_id = f"d{device_no:05d}"
            dev_rng = np.random.default_rng([cfg.seed, device_no])
            device_no += 1
            lon, lat, ts, stays, trips = _device_trace(
                cfg, dev_rng, z_i, cent_lon, cent_lat, intra_lon, intra_lat,
                planted_cost, choice_p, day_starts,
            )
            county = county_of_zone[z_i]
            device_weights[device_id] = population[county] / max(sampled_per_county[county], 1)
            homes_rows.append(
                {
                    "device_id": device_id,
                    "lon": stays["home_lon"],
                    "lat": stays["home_lat"],
                    "zone_id": zones[z_i].zone_id,
                    "county_id": county,
                }
            )
            for s in stays["stays"]:
                stay_rows.append({"device_id": device_id, **s})
            for t in trips:
                trip_rows.append({"device_id": device_id, **t})
            all_dev.append(np.full(lon.shape[0], device_no - 1, dtype=np.int32))
            all_lon.append(lon)
            all_lat.append(lat)
            all_ts.append(ts)

    if device_no == 0:
        raise ValueError("sampling produced no devices; raise population or rate")

    lon = np.concatenate(all_lon)
    lat = np.concatenate(all_lat)
    ts = np.concatenate(all_ts)
    codes = np.concatenate(all_dev)
    n_pings = ts.shape[0]
    # GPS noise and accuracy tags
    sig_lon, sig_lat = _meters_to_deg(cfg.noise_sigma_m, cfg.noise_sigma_m, cfg.origin_lat)
    lon = lon + rng.normal(0.0, sig_lon, n_pings)
    lat = lat + rng.normal(0.0, sig_lat, n_pings)
    bad = rng.random(n_pings) < cfg.frac_low_accuracy
    accuracy = np.where(
        bad, rng.uniform(51.0, 120.0, n_pings), rng.uniform(5.0, 30.0, n_pings)
    ).round(1)
    table = PingTable(
        device_ids=[f"d{i:05d}" for i in range(device_no)],
        device_code=codes,
        lon=lon,
        lat=lat,
        ts=ts,
        accuracy=accuracy,
    ).sorted_by_device_time()

    truth_trips = pd.DataFrame(
        trip_rows,
        columns=["device_id", "origin_zone", "dest_zone", "depart", "arrive"],
    )
    zone_ids = tuple(z.zone_id for z in zones)
    if len(truth_trips):
        weekend = classify_day_types(truth_trips["depart"].to_numpy(), cfg.timezone)
        truth_trips["day_type"] = np.where(weekend, "weekend", "weekday")
        truth_trips["weight"] = truth_trips["device_id"].map(device_weights)
    else:
        truth_trips["day_type"] = []
        truth_trips["weight"] = []

    truth_odm = {}
    for day_type in ("weekday", "weekend"):
        cells = np.zeros((n, n))
        sub = truth_trips[truth_trips["day_type"] == day_type]
        if len(sub):
            np.add.at(
                cells,
                (
                    sub["origin_zone"].to_numpy(dtype=int),
                    sub["dest_zone"].to_numpy(dtype=int),
                ),
                sub["weight"].to_numpy(),
            )
        days = max(observed_days[day_type], 1)
        truth_odm[day_type] = ODMatrix(
            zone_index=zone_ids,
            cells=cells / days,
            day_type=day_type,
            year=cfg.base_year,
        )

    if len(truth_trips):
        ids_arr = np.asarray(zone_ids, dtype=object)
        truth_trips["origin_zone"] = ids_arr[truth_trips["origin_zone"].to_numpy(dtype=int)]
        truth_trips["dest_zone"] = ids_arr[truth_trips["dest_zone"].to_numpy(dtype=int)]

    sea_by_year = _make_sea_tables(cfg, zones, zone_pop, rng)
    return SynthResult(
        config=cfg,
        zones=zones,
        zone_index=index,
        pings=table,
        population=population,
        sea_by_year=sea_by_year,
        truth_homes=pd.DataFrame(homes_rows),
        truth_stays=pd.DataFrame(stay_rows),
        truth_trips=truth_trips,
        truth_odm=truth_odm,
        beta_star=cfg.beta_star,
        device_weights=device_weights,
        observed_days=observed_days,
    )


def _device_trace(cfg, rng, home_zone, cent_lon, cent_lat, intra_lon, intra_lat,
                  planted_cost, choice_p, day_starts):
    """One device's full trace plus its planted stays and trips."""
    jr = cfg.home_jitter_m * math.sqrt(rng.random())
    ja = rng.random() * 2 * math.pi
    jdx, jdy = _meters_to_deg(jr * math.cos(ja), jr * math.sin(ja), cent_lat[home_zone])
    home_lon = cent_lon[home_zone] + jdx
    home_lat = cent_lat[home_zone] + jdy

    times, lons, lats = [], [], []
    stays, trips = [], []

    def emit(t0, t1, lon, lat, interval):
        tt = np.arange(t0, t1, interval, dtype=np.int64)
        if tt.size == 0:
            tt = np.asarray([t0], dtype=np.int64)
        times.append(tt)
        lons.append(np.full(tt.shape[0], lon))
        lats.append(np.full(tt.shape[0], lat))

    def emit_travel(t0, lon0, lat0, lon1, lat1, duration):
        tt = np.arange(t0 + cfg.travel_ping_interval_s, t0 + duration,
                       cfg.travel_ping_interval_s, dtype=np.int64)
        if tt.size == 0:
            return
        frac = (tt - t0) / duration
        times.append(tt)
        lons.append(lon0 + frac * (lon1 - lon0))
        lats.append(lat0 + frac * (lat1 - lat0))

    day_end_hour = 20 * 3600
    day_begin_hour = 8 * 3600
    for t_mid in day_starts:
        # night: [00:00, 06:00) and [21:00, 24:00) at the home anchor
        emit(t_mid, t_mid + 6 * 3600, home_lon, home_lat, cfg.night_ping_interval_s)
        emit(t_mid + 21 * 3600, t_mid + 24 * 3600, home_lon, home_lat, cfg.night_ping_interval_s)

        k = int(rng.poisson(cfg.excursion_rate))
        cursor = t_mid + day_begin_hour
        home_since = t_mid + 6 * 3600
        for _ in range(k):
            dest = int(rng.choice(choice_p.shape[1], p=choice_p[home_zone]))
            if dest == home_zone:
                dlon, dlat = intra_lon[dest], intra_lat[dest]
            else:
                dlon, dlat = cent_lon[dest], cent_lat[dest]
            d_m = planted_cost[home_zone, dest]
            travel = max(int(d_m / cfg.speed_mps), 60)
            gap = int(rng.integers(1800, 3600))
            start = cursor + gap
            end = start + 2 * travel + cfg.stay_duration_s
            if end > t_mid + day_end_hour:
                break
            # home dwell pings up to departure
            emit(home_since, start, home_lon, home_lat, cfg.home_ping_interval_s)
            stays.append(_stay(home_lon, home_lat, home_since, start))
            emit_travel(start, home_lon, home_lat, dlon, dlat, travel)
            t_arrive = start + travel
            emit(t_arrive, t_arrive + cfg.stay_duration_s, dlon, dlat, cfg.stay_ping_interval_s)
            stays.append(_stay(dlon, dlat, t_arrive, t_arrive + cfg.stay_duration_s))
            trips.append(_trip(home_zone, dest, start, t_arrive))
            t_back = t_arrive + cfg.stay_duration_s
            emit_travel(t_back, dlon, dlat, home_lon, home_lat, travel)
            trips.append(_trip(dest, home_zone, t_back, t_back + travel))
            cursor = t_back + travel
            home_since = cursor
        # evening at home until the night window
        emit(home_since, t_mid + 21 * 3600, home_lon, home_lat, cfg.home_ping_interval_s)
        stays.append(_stay(home_lon, home_lat, home_since, t_mid + 21 * 3600))

    tt = np.concatenate(times)
    order = np.argsort(tt, kind="stable")
    return (
        np.concatenate(lons)[order],
        np.concatenate(lats)[order],
        tt[order],
        {"home_lon": home_lon, "home_lat": home_lat, "stays": stays},
        trips,
    )


def _stay(lon, lat, arrival, departure):
    return {"lon": lon, "lat": lat, "arrival": int(arrival), "departure": int(departure)}


def _trip(origin, dest, depart, arrive):
    return {"origin_zone": origin, "dest_zone": dest, "depart": int(depart), "arrive": int(arrive)}


def _make_sea_tables(cfg: SynthConfig, zones, zone_pop, rng):
    """Raw SEA CSV tables per study year (plus the base year)."""
    n = len(zones)
    base = pd.DataFrame(
        {
            "zone_id": [z.zone_id for z in zones],
            "county_id": [z.county_id for z in zones],
            "total_population": zone_pop,
            "avg_hh_income": np.round(rng.uniform(40_000, 90_000, n), 0),
            "avg_vehicles": np.round(rng.uniform(1.2, 2.4, n), 2),
            "pct_employed": np.round(rng.uniform(40, 65, n), 2),
            "pct_emp_agcon": np.round(rng.uniform(0, 6, n), 2),
            "pct_emp_industry": np.round(rng.uniform(5, 25, n), 2),
            "pct_emp_retail": np.round(rng.uniform(5, 18, n), 2),
            "pct_emp_foodlodging": np.round(rng.uniform(2, 12, n), 2),
            "pct_emp_prosrv": np.round(rng.uniform(3, 15, n), 2),
            "pct_emp_govnmt": np.round(rng.uniform(2, 10, n), 2),
            "pct_emp_othsrv": np.round(rng.uniform(2, 10, n), 2),
            "pct_pop_gov_quarters": np.round(rng.uniform(0, 1.5, n), 3),
        }
    )
    out = {}
    years = sorted(set(cfg.forecast_years) | {cfg.base_year})
    for year in years:
        df = base.copy()
        growth = (1.0 + cfg.decadal_growth) ** ((year - cfg.base_year) / 10.0)
        df["total_population"] = np.round(base["total_population"] * growth, 0).astype(int)
        df["avg_hh_income"] = np.round(base["avg_hh_income"] * growth, 0)
        out[year] = df
    return out
