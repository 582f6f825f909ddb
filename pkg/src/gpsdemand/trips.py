"""Stay-point detection and trip segmentation.

A stay is a maximal contiguous ping run staying within ``dist_m`` of the
run's first ping (the anchor) and spanning at least ``min_stay_s``; trips
connect consecutive stays. Gaps longer than ``max_gap_s`` split a device's
record: no stay or trip crosses such a gap.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .domain import Ping, StayPoint, Trip
from .ingest import PingTable
from .kernels import haversine_m, stay_runs
from .quality import as_ping_table
from .timeutil import classify_day_type, classify_day_types

DEFAULT_STAY_DIST_M = 100.0
DEFAULT_MIN_STAY_S = 600.0
DEFAULT_MAX_GAP_S = 6 * 3600.0


def _device_arrays(pings):
    """Normalize a single-device ping sequence into (device_id, lon, lat, ts)."""
    if isinstance(pings, PingTable):
        table = pings
    elif pings and isinstance(pings[0], Ping):
        table = PingTable.from_pings(list(pings))
    else:
        table = as_ping_table(pings)
    if len(table) and len(np.unique(table.device_code)) > 1:
        raise ValueError("expected pings of a single device")
    device_id = table.device_ids[table.device_code[0]] if len(table) else ""
    return device_id, table.lon, table.lat, table.ts


def _chunk_bounds(ts: np.ndarray, max_gap_s: float) -> list:
    """[start, end) index pairs of gap-free record chunks."""
    if ts.shape[0] == 0:
        return []
    breaks = np.flatnonzero(np.diff(ts) > max_gap_s) + 1
    bounds = np.r_[0, breaks, ts.shape[0]]
    return [(int(s), int(e)) for s, e in zip(bounds[:-1], bounds[1:])]


def _stays_in_chunk(device_id, lon, lat, ts, offset, dist_m, min_stay_s):
    runs = stay_runs(lon, lat, ts.astype(np.float64), dist_m, min_stay_s)
    stays = []
    spans = []
    for s, e in runs:
        s, e = int(s), int(e)
        stays.append(
            StayPoint(
                device_id=device_id,
                lon=float(lon[s : e + 1].mean()),
                lat=float(lat[s : e + 1].mean()),
                arrival=int(ts[s]),
                departure=int(ts[e]),
                ping_count=e - s + 1,
            )
        )
        spans.append((offset + s, offset + e))
    return stays, spans


def _detect(device_id, lon, lat, ts, dist_m, min_stay_s, max_gap_s):
    if np.any(np.diff(ts) < 0):
        raise ValueError("pings not time-ordered")
    all_stays = []
    all_spans = []
    chunk_of_stay = []
    for c, (s, e) in enumerate(_chunk_bounds(ts, max_gap_s)):
        stays, spans = _stays_in_chunk(
            device_id, lon[s:e], lat[s:e], ts[s:e], s, dist_m, min_stay_s
        )
        all_stays.extend(stays)
        all_spans.extend(spans)
        chunk_of_stay.extend([c] * len(stays))
    return all_stays, all_spans, chunk_of_stay


def detect_stay_points(
    pings,
    dist_m: float = DEFAULT_STAY_DIST_M,
    min_stay_s: float = DEFAULT_MIN_STAY_S,
    max_gap_s: float = DEFAULT_MAX_GAP_S,
):
    """Stay points of one device's time-sorted pings."""
    device_id, lon, lat, ts = _device_arrays(pings)
    stays, _, _ = _detect(device_id, lon, lat, ts, dist_m, min_stay_s, max_gap_s)
    return stays


def segment_trips(
    pings,
    stays=None,
    tz: str = "UTC",
    dist_m: float = DEFAULT_STAY_DIST_M,
    min_stay_s: float = DEFAULT_MIN_STAY_S,
    max_gap_s: float = DEFAULT_MAX_GAP_S,
):
    """One trip per consecutive stay pair of one device (same record chunk).

    ``stays`` must come from detect_stay_points on the same pings with the
    same parameters (they are re-derived internally to recover ping spans);
    pass None to detect them here.
    """
    device_id, lon, lat, ts = _device_arrays(pings)
    detected, spans, chunks = _detect(device_id, lon, lat, ts, dist_m, min_stay_s, max_gap_s)
    if stays is not None and list(stays) != detected:
        raise ValueError("stays do not match detect_stay_points on these pings")
    return _trips_from_spans(device_id, lon, lat, ts, detected, spans, chunks, tz)


def _trips_from_spans(device_id, lon, lat, ts, stays, spans, chunks, tz):
    pairs = [
        (a, a + 1)
        for a in range(len(stays) - 1)
        if chunks[a] == chunks[a + 1]
    ]
    if not pairs:
        return []
    departs = np.asarray([stays[a].departure for a, _ in pairs], dtype=np.int64)
    weekend = classify_day_types(departs, tz)
    trips = []
    for (a, b), w in zip(pairs, weekend):
        o, d = stays[a], stays[b]
        mid = slice(spans[a][1] + 1, spans[b][0])
        xs = np.r_[o.lon, lon[mid], d.lon]
        ys = np.r_[o.lat, lat[mid], d.lat]
        path = float(haversine_m(xs[:-1], ys[:-1], xs[1:], ys[1:]).sum())
        trips.append(
            Trip(
                device_id=device_id,
                origin_stay=o,
                dest_stay=d,
                depart=o.departure,
                arrive=d.arrival,
                travel_time=float(d.arrival - o.departure),
                path_length=path,
                day_type="weekend" if w else "weekday",
                weight=1.0,
            )
        )
    return trips


def extract_trips(
    pings,
    tz: str = "UTC",
    dist_m: float = DEFAULT_STAY_DIST_M,
    min_stay_s: float = DEFAULT_MIN_STAY_S,
    max_gap_s: float = DEFAULT_MAX_GAP_S,
):
    """Stays and trips for every device in a ping set (devices independent)."""
    table = as_ping_table(pings).sorted_by_device_time()
    all_stays = []
    all_trips = []
    for device_id, sl in table.iter_devices():
        lon, lat, ts = table.lon[sl], table.lat[sl], table.ts[sl]
        stays, spans, chunks = _detect(device_id, lon, lat, ts, dist_m, min_stay_s, max_gap_s)
        all_stays.extend(stays)
        all_trips.extend(
            _trips_from_spans(device_id, lon, lat, ts, stays, spans, chunks, tz)
        )
    return all_stays, all_trips


def apply_weights(trips, weights: dict):
    """Attach per-device upscale weights; devices without a weight are excluded.

    Returns (weighted trips, number of excluded trips).
    """
    out = []
    excluded = 0
    for t in trips:
        w = weights.get(t.device_id)
        if w is None:
            excluded += 1
            continue
        out.append(
            Trip(
                device_id=t.device_id,
                origin_stay=t.origin_stay,
                dest_stay=t.dest_stay,
                depart=t.depart,
                arrive=t.arrive,
                travel_time=t.travel_time,
                path_length=t.path_length,
                day_type=t.day_type,
                weight=w,
            )
        )
    return out, excluded


# ---------------------------------------------------------------------------
# tabular form (CSV schema shared with the CLI artifacts)

TRIP_COLUMNS = (
    "device_id",
    "o_lon",
    "o_lat",
    "d_lon",
    "d_lat",
    "depart",
    "arrive",
    "travel_time_s",
    "path_length_m",
    "day_type",
    "weight",
)


def trips_to_dataframe(trips) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (
                t.device_id,
                t.origin_stay.lon,
                t.origin_stay.lat,
                t.dest_stay.lon,
                t.dest_stay.lat,
                t.depart,
                t.arrive,
                t.travel_time,
                t.path_length,
                t.day_type,
                t.weight,
            )
            for t in trips
        ],
        columns=list(TRIP_COLUMNS),
    )


def stays_to_dataframe(stays) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (s.device_id, s.lon, s.lat, s.arrival, s.departure, s.ping_count)
            for s in stays
        ],
        columns=["device_id", "lon", "lat", "arrival", "departure", "ping_count"],
    )
