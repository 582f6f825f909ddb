"""Shared fixtures and brute-force helpers for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from gpsdemand.domain import Zone
from gpsdemand.ingest import PingTable, ZoneIndex

EARTH_RADIUS_M = 6371008.8


def haversine_scalar(lon1, lat1, lon2, lat2) -> float:
    """Independent reference haversine implementation."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def brute_force_stays(lon, lat, ts, dist_m, min_stay_s):
    """O(n^2) maximal-run stay oracle: anchor-scan semantics.

    From each anchor i, extend while every subsequent ping stays within
    dist_m of ping i; emit [i, j] when the run has >= 2 pings spanning at
    least min_stay_s, then restart after the run.
    """
    out = []
    n = len(ts)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and haversine_scalar(lon[i], lat[i], lon[j + 1], lat[j + 1]) <= dist_m:
            j += 1
        if j > i and ts[j] - ts[i] >= min_stay_s:
            out.append((i, j))
            i = j + 1
        else:
            i += 1
    return out


def grid_zones(nx=3, ny=3, cell=0.1, lon0=-87.0, lat0=40.0, counties=1):
    """Square grid of zones mirroring the synthetic geometry."""
    zones = []
    per_county = max(1, math.ceil(nx / counties))
    for ix in range(nx):
        for iy in range(ny):
            x0, y0 = lon0 + ix * cell, lat0 + iy * cell
            ring = ((x0, y0), (x0 + cell, y0), (x0 + cell, y0 + cell), (x0, y0 + cell), (x0, y0))
            zones.append(
                Zone(
                    zone_id=f"Z{ix}{iy}",
                    outer=ring,
                    holes=(),
                    centroid=(x0 + cell / 2, y0 + cell / 2),
                    county_id=f"C{ix // per_county}",
                )
            )
    return zones


@pytest.fixture
def zone_grid():
    zones = grid_zones()
    return zones, ZoneIndex(zones)


def make_ping_table(rows) -> PingTable:
    """Rows of (device_id, lon, lat, ts, accuracy) -> a sorted PingTable."""
    ids: dict = {}
    codes = np.empty(len(rows), dtype=np.int32)
    lon = np.empty(len(rows))
    lat = np.empty(len(rows))
    ts = np.empty(len(rows), dtype=np.int64)
    acc = np.empty(len(rows))
    for i, (d, x, y, t, a) in enumerate(rows):
        codes[i] = ids.setdefault(d, len(ids))
        lon[i], lat[i], ts[i], acc[i] = x, y, t, a
    return PingTable(list(ids), codes, lon, lat, ts, acc).sorted_by_device_time()
