"""Weighted day-type OD matrices and observed interzonal cost matrices."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .domain import FALLBACK, OBSERVED, CostMatrix, ODMatrix
from .ingest import ZoneIndex
from .kernels import haversine_m
from .trips import TRIP_COLUMNS, trips_to_dataframe

COST_FLOOR = 1.0  # seconds or meters; keeps impedances strictly positive
DEFAULT_FALLBACK_SPEED_MPS = 13.9  # used only when no trip supplies a speed


def _trips_frame(trips) -> pd.DataFrame:
    if isinstance(trips, pd.DataFrame):
        missing = set(TRIP_COLUMNS) - set(trips.columns)
        if missing:
            raise ValueError(f"trip table is missing columns: {sorted(missing)}")
        return trips
    return trips_to_dataframe(trips)


def _endpoint_zones(df: pd.DataFrame, index: ZoneIndex):
    zone_pos = {z.zone_id: i for i, z in enumerate(index.zones)}
    o_ids = index.assign_many(df["o_lon"].to_numpy(), df["o_lat"].to_numpy())
    d_ids = index.assign_many(df["d_lon"].to_numpy(), df["d_lat"].to_numpy())
    o_pos = np.asarray([zone_pos.get(z, -1) if z is not None else -1 for z in o_ids])
    d_pos = np.asarray([zone_pos.get(z, -1) if z is not None else -1 for z in d_ids])
    return o_pos, d_pos


def build_odm(trips, index: ZoneIndex, day_type: str, year: int, observed_days: int):
    """Aggregate weighted trips into a typical-day OD matrix.

    Cells are weighted trip counts divided by the number of observed days of
    the requested day type. Trips with either endpoint outside all zones are
    excluded and counted in the diagnostics.
    """
    if observed_days <= 0:
        raise ValueError(f"zero observed {day_type} days")
    df = _trips_frame(trips)
    df = df[df["day_type"] == day_type]
    n = len(index.zones)
    cells = np.zeros((n, n))
    diagnostics = {"included": 0, "outside_zones": 0}
    if len(df):
        o_pos, d_pos = _endpoint_zones(df, index)
        ok = (o_pos >= 0) & (d_pos >= 0)
        diagnostics["outside_zones"] = int((~ok).sum())
        diagnostics["included"] = int(ok.sum())
        np.add.at(cells, (o_pos[ok], d_pos[ok]), df["weight"].to_numpy()[ok])
    cells /= observed_days
    odm = ODMatrix(
        zone_index=tuple(z.zone_id for z in index.zones),
        cells=cells,
        day_type=day_type,
        year=year,
    )
    return odm, diagnostics


def odm_marginals(odm: ODMatrix):
    """(production, attraction) = (row sums, column sums)."""
    return odm.cells.sum(axis=1), odm.cells.sum(axis=0)


def _centroid_distances(index: ZoneIndex) -> np.ndarray:
    lons = np.asarray([z.centroid[0] for z in index.zones])
    lats = np.asarray([z.centroid[1] for z in index.zones])
    return haversine_m(lons[:, None], lats[:, None], lons[None, :], lats[None, :])


def build_cost_matrix(
    trips,
    index: ZoneIndex,
    stat: str = "median",
    metric: str = "path_length",
    fallback_speed_mps: float | None = None,
) -> CostMatrix:
    """Aggregate observed trip costs per zone pair, with flagged fallbacks.

    D_ij is the mean/median of the chosen metric over observed i->j trips.
    Unobserved pairs fall back to centroid haversine distance (path_length)
    or that distance divided by the mean observed speed (travel_time);
    unobserved intrazonal cells use half the distance to the nearest other
    centroid. Every cell is clamped to at least COST_FLOOR.
    """
    if stat not in ("mean", "median"):
        raise ValueError(f"unknown aggregation stat: {stat}")
    if metric not in ("travel_time", "path_length"):
        raise ValueError(f"unknown aggregation metric: {metric}")
    df = _trips_frame(trips)
    n = len(index.zones)
    value_col = "travel_time_s" if metric == "travel_time" else "path_length_m"

    cells = np.zeros((n, n))
    observed = np.zeros((n, n), dtype=bool)
    total_path = total_time = 0.0
    if len(df):
        o_pos, d_pos = _endpoint_zones(df, index)
        ok = (o_pos >= 0) & (d_pos >= 0)
        sub = pd.DataFrame(
            {
                "i": o_pos[ok],
                "j": d_pos[ok],
                "value": df[value_col].to_numpy()[ok],
            }
        )
        total_path = float(df["path_length_m"].to_numpy()[ok].sum())
        total_time = float(df["travel_time_s"].to_numpy()[ok].sum())
        agg = sub.groupby(["i", "j"])["value"].agg(stat)
        for (i, j), v in agg.items():
            cells[i, j] = v
            observed[i, j] = True

    dist = _centroid_distances(index)
    if n > 1:
        off = dist + np.where(np.eye(n, dtype=bool), np.inf, 0.0)
        half_nearest = off.min(axis=1) / 2.0
    else:
        half_nearest = np.full(n, COST_FLOOR)
    fallback_dist = dist.copy()
    np.fill_diagonal(fallback_dist, half_nearest)
    if metric == "travel_time":
        if fallback_speed_mps is None:
            fallback_speed_mps = (
                total_path / total_time if total_time > 0 else DEFAULT_FALLBACK_SPEED_MPS
            )
        fallback_cells = fallback_dist / fallback_speed_mps
    else:
        fallback_cells = fallback_dist
    cells = np.where(observed, cells, fallback_cells)
    cells = np.maximum(cells, COST_FLOOR)
    return CostMatrix(
        zone_index=tuple(z.zone_id for z in index.zones),
        cells=cells,
        stat=stat,
        metric=metric,
        observed_mask=observed,
    )


# ---------------------------------------------------------------------------
# sparse CSV export (origin_zone, dest_zone, value, provenance)


def odm_to_dataframe(odm: ODMatrix) -> pd.DataFrame:
    i_idx, j_idx = np.nonzero(odm.cells)
    zones = np.asarray(odm.zone_index, dtype=object)
    return pd.DataFrame(
        {
            "origin_zone": zones[i_idx],
            "dest_zone": zones[j_idx],
            "value": odm.cells[i_idx, j_idx],
            "provenance": OBSERVED,
        }
    )


def odm_from_dataframe(df: pd.DataFrame, zone_index, day_type: str, year: int) -> ODMatrix:
    pos = {z: i for i, z in enumerate(zone_index)}
    n = len(zone_index)
    cells = np.zeros((n, n))
    for r in df.itertuples(index=False):
        cells[pos[str(r.origin_zone)], pos[str(r.dest_zone)]] = r.value
    return ODMatrix(zone_index=tuple(zone_index), cells=cells, day_type=day_type, year=year)


def cost_to_dataframe(cost: CostMatrix) -> pd.DataFrame:
    n = len(cost.zone_index)
    i_idx, j_idx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    zones = np.asarray(cost.zone_index, dtype=object)
    return pd.DataFrame(
        {
            "origin_zone": zones[i_idx.ravel()],
            "dest_zone": zones[j_idx.ravel()],
            "value": cost.cells.ravel(),
            "provenance": np.where(cost.observed_mask.ravel(), OBSERVED, FALLBACK),
        }
    )


def cost_from_dataframe(df: pd.DataFrame, zone_index, stat: str, metric: str) -> CostMatrix:
    pos = {z: i for i, z in enumerate(zone_index)}
    n = len(zone_index)
    cells = np.full((n, n), COST_FLOOR)
    observed = np.zeros((n, n), dtype=bool)
    for r in df.itertuples(index=False):
        i, j = pos[str(r.origin_zone)], pos[str(r.dest_zone)]
        cells[i, j] = r.value
        observed[i, j] = r.provenance == OBSERVED
    return CostMatrix(
        zone_index=tuple(zone_index), cells=cells, stat=stat, metric=metric, observed_mask=observed
    )
