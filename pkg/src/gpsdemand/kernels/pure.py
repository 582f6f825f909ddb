"""NumPy implementations of the hot kernels.

These are the reference semantics; the compiled backend in
``gpsdemand._speedups`` must agree exactly (up to floating point rounding).
"""

from __future__ import annotations

import numpy as np

EARTH_RADIUS_M = 6371008.8


def haversine_m(lon1, lat1, lon2, lat2):
    """Great-circle distance in meters between equal-length coordinate arrays."""
    lon1 = np.radians(np.asarray(lon1, dtype=np.float64))
    lat1 = np.radians(np.asarray(lat1, dtype=np.float64))
    lon2 = np.radians(np.asarray(lon2, dtype=np.float64))
    lat2 = np.radians(np.asarray(lat2, dtype=np.float64))
    a = (
        np.sin((lat2 - lat1) / 2.0) ** 2
        + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.minimum(a, 1.0)))


def stay_runs(lon, lat, ts, dist_m, min_stay_s):
    """Anchor-scan dwell detection over one time-sorted trace.

    A run starts at an anchor ping and extends while every subsequent ping is
    within ``dist_m`` of the anchor; runs of >= 2 pings spanning at least
    ``min_stay_s`` are emitted as inclusive [start, end] index pairs.
    """
    lon = np.asarray(lon, dtype=np.float64)
    lat = np.asarray(lat, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    n = lon.shape[0]
    runs = []
    i = 0
    while i < n - 1:
        j = i
        # extend while the next ping stays within dist_m of the anchor
        while j + 1 < n and _hav1(lon[i], lat[i], lon[j + 1], lat[j + 1]) <= dist_m:
            j += 1
        if j > i and ts[j] - ts[i] >= min_stay_s:
            runs.append((i, j))
            i = j + 1
        else:
            i += 1
    if not runs:
        return np.empty((0, 2), dtype=np.int64)
    return np.asarray(runs, dtype=np.int64)


def _hav1(lon1, lat1, lon2, lat2):
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    a = (
        np.sin(np.radians(lat2 - lat1) / 2.0) ** 2
        + np.cos(p1) * np.cos(p2) * np.sin(np.radians(lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(min(a, 1.0)))


def mean_shift_modes(xy, bandwidth, tol, max_iter):
    """Flat-kernel mean shift in a planar metric; every point is a seed.

    Returns the converged seed positions (n, 2); mode merging is done by the
    caller. All seeds are iterated simultaneously but each seed stops moving
    once its own shift drops below ``tol``, matching the compiled per-seed
    loop.
    """
    pts = np.asarray(xy, dtype=np.float64)
    seeds = pts.copy()
    n = seeds.shape[0]
    active = np.ones(n, dtype=bool)
    bw2 = bandwidth * bandwidth
    for _ in range(max_iter):
        if not active.any():
            break
        cur = seeds[active]
        d2 = (
            (cur[:, 0:1] - pts[None, :, 0]) ** 2
            + (cur[:, 1:2] - pts[None, :, 1]) ** 2
        )
        within = d2 <= bw2
        counts = within.sum(axis=1)
        counts_safe = np.maximum(counts, 1)
        new = (within.astype(np.float64) @ pts) / counts_safe[:, None]
        new[counts == 0] = cur[counts == 0]
        shift = np.hypot(new[:, 0] - cur[:, 0], new[:, 1] - cur[:, 1])
        seeds[active] = new
        done = (shift < tol) | (counts == 0)
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return seeds
