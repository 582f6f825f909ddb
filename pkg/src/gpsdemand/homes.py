"""Home location detection and county representativeness.

Homes are the nighttime mean-shift mode supported by the most distinct local
nights; the reciprocal of a county's representativeness ratio upscales its
residents' trips.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from . import geo
from .domain import HomeEstimate, RegionStats, RepresentativenessTable
from .ingest import PingTable, ZoneIndex
from .kernels import mean_shift_modes
from .quality import as_ping_table
from .timeutil import local_fields

NIGHT_START_HOUR = 21  # local [21:00, 24:00) plus [00:00, 06:00)
NIGHT_END_HOUR = 6


def nighttime_pings(pings, tz: str) -> PingTable:
    """Pings whose local time falls in the 21:00-06:00 half-open night window."""
    table = as_ping_table(pings)
    f = local_fields(table.ts, tz)
    return table.select(f["is_night"])


def mean_shift(points, bandwidth_m: float = 100.0, tol_m: float = 1.0, max_iter: int = 100):
    """Flat-kernel mean shift over lon/lat points.

    Every point seeds an iteration toward the centroid of points within the
    bandwidth; converged seeds closer than the bandwidth merge into one mode.
    Returns [((lon, lat), member_count), ...] with counts by nearest mode.
    """
    modes, _ = _mean_shift_labeled(points, bandwidth_m, tol_m, max_iter)
    return modes


def _mean_shift_labeled(points, bandwidth_m: float, tol_m: float = 1.0, max_iter: int = 100):
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.size == 0:
        raise ValueError("no points")
    ref_lon = float(pts[:, 0].mean())
    ref_lat = float(pts[:, 1].mean())
    x, y = geo.local_plane(pts[:, 0], pts[:, 1], ref_lon, ref_lat)
    xy = np.column_stack([x, y])
    shifted = mean_shift_modes(xy, bandwidth_m, tol_m, max_iter)

    # merge converged seeds closer than the bandwidth (first seed wins the slot)
    centers: list = []
    members: list = []
    for i in range(shifted.shape[0]):
        placed = False
        for m, c in enumerate(centers):
            if np.hypot(shifted[i, 0] - c[0], shifted[i, 1] - c[1]) < bandwidth_m:
                k = len(members[m])
                centers[m] = (
                    (c[0] * k + shifted[i, 0]) / (k + 1),
                    (c[1] * k + shifted[i, 1]) / (k + 1),
                )
                members[m].append(i)
                placed = True
                break
        if not placed:
            centers.append((shifted[i, 0], shifted[i, 1]))
            members.append([i])

    centers_arr = np.asarray(centers)
    labels = assign_nearest(xy, centers_arr)
    counts = np.bincount(labels, minlength=centers_arr.shape[0])
    lon, lat = geo.unproject_local(centers_arr[:, 0], centers_arr[:, 1], ref_lon, ref_lat)
    return [((float(lon[m]), float(lat[m])), int(counts[m])) for m in range(len(centers))], labels


def assign_nearest(xy: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        (xy[:, 0:1] - centers[None, :, 0]) ** 2
        + (xy[:, 1:2] - centers[None, :, 1]) ** 2
    )
    return d2.argmin(axis=1)


def detect_home(pings, tz: str, bandwidth_m: float = 100.0, zone_index: ZoneIndex | None = None):
    """Infer one device's home from its nighttime pings, or None if it has none.

    The home is the mode supported by the most distinct local nights; ties go
    to the larger ping count, then the southernmost, then westernmost mode.
    """
    table = as_ping_table(pings)
    night = nighttime_pings(table, tz)
    if len(night) == 0:
        return None
    device_id = night.device_ids[night.device_code[0]]
    return _home_from_night_arrays(
        device_id, night.lon, night.lat, night.ts, tz, bandwidth_m, zone_index
    )


def _home_from_night_arrays(device_id, lon, lat, ts, tz, bandwidth_m, zone_index):
    pts = np.column_stack([lon, lat])
    modes, labels = _mean_shift_labeled(pts, bandwidth_m)
    nights = local_fields(ts, tz)["night"]
    best = None
    for m, ((mlon, mlat), count) in enumerate(modes):
        distinct_nights = len(set(nights[labels == m]))
        if distinct_nights == 0:
            continue
        key = (-distinct_nights, -count, mlat, mlon)
        if best is None or key < best[0]:
            best = (key, mlon, mlat, distinct_nights)
    _, mlon, mlat, distinct_nights = best
    zone_id = county_id = None
    if zone_index is not None:
        zone_id = zone_index.assign(mlon, mlat)
        if zone_id is not None:
            zone = zone_index.zone_by_id(zone_id)
            county_id = zone.county_id
    return HomeEstimate(
        device_id=device_id,
        lon=float(mlon),
        lat=float(mlat),
        zone_id=zone_id,
        county_id=county_id,
        nights=int(distinct_nights),
    )


def detect_homes(pings, tz: str, bandwidth_m: float = 100.0, zone_index: ZoneIndex | None = None):
    """Per-device home detection over a whole ping set.

    Returns (home estimates, device ids that had no nighttime pings).
    """
    table = as_ping_table(pings)
    night = nighttime_pings(table, tz).sorted_by_device_time()
    estimates = []
    seen = set()
    for device_id, sl in night.iter_devices():
        seen.add(device_id)
        estimates.append(
            _home_from_night_arrays(
                device_id,
                night.lon[sl],
                night.lat[sl],
                night.ts[sl],
                tz,
                bandwidth_m,
                zone_index,
            )
        )
    all_ids = {table.device_ids[c] for c in np.unique(table.device_code)}
    no_night = sorted(all_ids - seen)
    return estimates, no_night


def compute_representativeness(home_estimates, population: dict) -> RepresentativenessTable:
    """r(county) = detected homes in county / county population.

    Counties with detected homes but no population row are an error; counties
    with population but no homes get r = 0.
    """
    counts: dict = {}
    for est in home_estimates:
        if est.county_id:
            counts[est.county_id] = counts.get(est.county_id, 0) + 1
    missing = sorted(set(counts) - set(population))
    if missing:
        raise ValueError(f"no population row for regions: {', '.join(missing)}")
    regions = {}
    for county_id, pop in population.items():
        homes = counts.get(county_id, 0)
        ratio = homes / pop if pop > 0 else None
        regions[county_id] = RegionStats(detected_homes=homes, population=int(pop), ratio=ratio)
    return RepresentativenessTable(regions=regions)


def user_weight(device_id: str, home_estimates, representativeness: RepresentativenessTable):
    """Upscale weight 1 / r(home county), or None when the device is unweightable."""
    for est in home_estimates:
        if est.device_id == device_id:
            if not est.county_id:
                return None
            r = representativeness.ratio(est.county_id)
            if not r:
                return None
            return 1.0 / r
    return None


def compute_weights(home_estimates, representativeness: RepresentativenessTable):
    """Weights for every weightable device plus exclusion diagnostics."""
    weights = {}
    diagnostics = {"no_home_county": 0, "zero_ratio": 0}
    for est in home_estimates:
        if not est.county_id:
            diagnostics["no_home_county"] += 1
            continue
        r = representativeness.ratio(est.county_id)
        if not r:
            diagnostics["zero_ratio"] += 1
            continue
        weights[est.device_id] = 1.0 / r
    return weights, diagnostics


# ---------------------------------------------------------------------------
# exports


def homes_to_dataframe(home_estimates) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "device_id": e.device_id,
                "lon": e.lon,
                "lat": e.lat,
                "zone_id": e.zone_id if e.zone_id is not None else "",
                "county_id": e.county_id if e.county_id is not None else "",
                "nights": e.nights,
            }
            for e in home_estimates
        ],
        columns=["device_id", "lon", "lat", "zone_id", "county_id", "nights"],
    )


def representativeness_to_dataframe(table: RepresentativenessTable) -> pd.DataFrame:
    rows = [
        {
            "county_id": county_id,
            "detected_homes": s.detected_homes,
            "population": s.population,
            "ratio": s.ratio if s.ratio is not None else "",
        }
        for county_id, s in sorted(table.regions.items())
    ]
    return pd.DataFrame(rows, columns=["county_id", "detected_homes", "population", "ratio"])


def representativeness_to_geojson(table: RepresentativenessTable, zones) -> dict:
    """County ratios attached to dissolved county bounding boxes, for choropleths."""
    by_county: dict = {}
    for z in zones:
        arr = np.asarray(z.outer)
        box = by_county.setdefault(
            z.county_id, [np.inf, np.inf, -np.inf, -np.inf]
        )
        box[0] = min(box[0], arr[:, 0].min())
        box[1] = min(box[1], arr[:, 1].min())
        box[2] = max(box[2], arr[:, 0].max())
        box[3] = max(box[3], arr[:, 1].max())
    features = []
    for county_id, s in sorted(table.regions.items()):
        box = by_county.get(county_id)
        if box is None:
            continue
        ring = [
            [box[0], box[1]],
            [box[2], box[1]],
            [box[2], box[3]],
            [box[0], box[3]],
            [box[0], box[1]],
        ]
        features.append(
            {
                "type": "Feature",
                "properties": {
                    "county_id": county_id,
                    "detected_homes": s.detected_homes,
                    "population": s.population,
                    "ratio": s.ratio,
                },
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }
        )
    return {"type": "FeatureCollection", "features": features}
