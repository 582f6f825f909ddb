"""OD and cost matrix construction against double-loop oracles."""

import math

import numpy as np
import pandas as pd
import pytest

from gpsdemand.ingest import ZoneIndex
from gpsdemand.trips import TRIP_COLUMNS
from gpsdemand.kernels import haversine_m
from gpsdemand.matrices import (
    COST_FLOOR,
    build_cost_matrix,
    build_odm,
    cost_from_dataframe,
    cost_to_dataframe,
    odm_from_dataframe,
    odm_marginals,
    odm_to_dataframe,
)

from conftest import grid_zones

LON0, LAT0 = -87.0, 40.0


def empty_trips():
    return pd.DataFrame(columns=list(TRIP_COLUMNS))


def trip_row(o_zone_center, d_zone_center, day_type="weekday", weight=1.0,
             travel_time=600.0, path_length=5000.0, device="d"):
    return {
        "device_id": device,
        "o_lon": o_zone_center[0],
        "o_lat": o_zone_center[1],
        "d_lon": d_zone_center[0],
        "d_lat": d_zone_center[1],
        "depart": 0,
        "arrive": int(travel_time),
        "travel_time_s": travel_time,
        "path_length_m": path_length,
        "day_type": day_type,
        "weight": weight,
    }


@pytest.fixture
def index():
    return ZoneIndex(grid_zones(3, 3, cell=0.1, lon0=LON0, lat0=LAT0))


def centers(index):
    return {z.zone_id: z.centroid for z in index.zones}


def test_odm_against_double_loop_oracle(index):
    rng = np.random.default_rng(0)
    c = centers(index)
    ids = list(c)
    rows = []
    for _ in range(200):
        o, d = rng.choice(ids, 2)
        rows.append(trip_row(c[o], c[d], weight=float(rng.uniform(1, 5))))
    df = pd.DataFrame(rows)
    odm, diag = build_odm(df, index, "weekday", 2021, observed_days=4)
    assert diag["included"] == 200 and diag["outside_zones"] == 0
    # independent double-loop accumulation
    pos = {z: i for i, z in enumerate(ids)}
    want = np.zeros((9, 9))
    for r in rows:
        i = pos[index.assign(r["o_lon"], r["o_lat"])]
        j = pos[index.assign(r["d_lon"], r["d_lat"])]
        want[i, j] += r["weight"]
    np.testing.assert_allclose(odm.cells, want / 4.0)
    P, A = odm_marginals(odm)
    np.testing.assert_allclose(P, want.sum(axis=1) / 4.0)
    np.testing.assert_allclose(A, want.sum(axis=0) / 4.0)


def test_odm_excludes_outside_trips_and_day_type(index):
    c = centers(index)
    rows = [
        trip_row(c["Z00"], c["Z11"]),
        trip_row(c["Z00"], c["Z11"], day_type="weekend"),
        trip_row((0.0, 0.0), c["Z11"]),  # origin far outside the grid
    ]
    odm, diag = build_odm(pd.DataFrame(rows), index, "weekday", 2021, observed_days=1)
    assert diag == {"included": 1, "outside_zones": 1}
    assert odm.cells.sum() == 1.0


def test_odm_requires_positive_observed_days(index):
    with pytest.raises(ValueError, match="observed"):
        build_odm(empty_trips(), index, "weekday", 2021, observed_days=0)


def test_cost_matrix_observed_cells(index):
    c = centers(index)
    rows = [
        trip_row(c["Z00"], c["Z11"], path_length=4000.0),
        trip_row(c["Z00"], c["Z11"], path_length=6000.0),
        trip_row(c["Z00"], c["Z11"], path_length=9000.0),
    ]
    pos = {z.zone_id: i for i, z in enumerate(index.zones)}
    med = build_cost_matrix(pd.DataFrame(rows), index, "median", "path_length")
    assert med.cells[pos["Z00"], pos["Z11"]] == 6000.0
    mean = build_cost_matrix(pd.DataFrame(rows), index, "mean", "path_length")
    assert mean.cells[pos["Z00"], pos["Z11"]] == pytest.approx(19000.0 / 3)
    assert med.observed_mask[pos["Z00"], pos["Z11"]]
    assert not med.observed_mask[pos["Z11"], pos["Z00"]]


def test_cost_matrix_even_count_median_is_mean_of_middle_two(index):
    c = centers(index)
    rows = [
        trip_row(c["Z00"], c["Z11"], path_length=v)
        for v in (1000.0, 2000.0, 8000.0, 9000.0)
    ]
    cost = build_cost_matrix(pd.DataFrame(rows), index, "median", "path_length")
    pos = {z.zone_id: i for i, z in enumerate(index.zones)}
    assert cost.cells[pos["Z00"], pos["Z11"]] == 5000.0


def test_cost_matrix_distance_fallback_is_centroid_haversine(index):
    cost = build_cost_matrix(empty_trips(), index, "median", "path_length")
    zones = index.zones
    pos = {z.zone_id: i for i, z in enumerate(zones)}
    i, j = pos["Z00"], pos["Z22"]
    want = float(
        haversine_m(
            zones[i].centroid[0], zones[i].centroid[1],
            zones[j].centroid[0], zones[j].centroid[1],
        )
    )
    assert cost.cells[i, j] == pytest.approx(want)
    assert not cost.observed_mask[i, j]


def test_cost_matrix_intrazonal_fallback_half_nearest(index):
    cost = build_cost_matrix(empty_trips(), index, "median", "path_length")
    zones = index.zones
    d = np.asarray(
        [
            [
                float(haversine_m(a.centroid[0], a.centroid[1], b.centroid[0], b.centroid[1]))
                for b in zones
            ]
            for a in zones
        ]
    )
    np.fill_diagonal(d, np.inf)
    for i in range(len(zones)):
        assert cost.cells[i, i] == pytest.approx(d[i].min() / 2.0, rel=1e-9)


def test_cost_matrix_time_fallback_uses_observed_speed(index):
    c = centers(index)
    # one observed trip at 10 m/s fixes the global fallback speed
    rows = [trip_row(c["Z00"], c["Z11"], travel_time=1000.0, path_length=10000.0)]
    cost = build_cost_matrix(pd.DataFrame(rows), index, "median", "travel_time")
    zones = index.zones
    pos = {z.zone_id: i for i, z in enumerate(zones)}
    i, j = pos["Z00"], pos["Z22"]
    dist = float(
        haversine_m(
            zones[i].centroid[0], zones[i].centroid[1],
            zones[j].centroid[0], zones[j].centroid[1],
        )
    )
    assert cost.cells[i, j] == pytest.approx(dist / 10.0, rel=1e-9)


def test_cost_matrix_clamped_at_floor():
    # two zones whose centroids nearly coincide produce sub-floor fallbacks
    zones = grid_zones(2, 1, cell=1e-7, lon0=LON0, lat0=LAT0)
    index = ZoneIndex(zones)
    cost = build_cost_matrix(empty_trips(), index, "median", "path_length")
    assert (cost.cells >= COST_FLOOR).all()


def test_odm_round_trip(index):
    c = centers(index)
    rows = [trip_row(c["Z00"], c["Z11"], weight=3.0), trip_row(c["Z10"], c["Z21"], weight=2.0)]
    odm, _ = build_odm(pd.DataFrame(rows), index, "weekday", 2021, observed_days=2)
    df = odm_to_dataframe(odm)
    assert set(df.columns) == {"origin_zone", "dest_zone", "value", "provenance"}
    back = odm_from_dataframe(df, odm.zone_index, "weekday", 2021)
    np.testing.assert_allclose(back.cells, odm.cells)


def test_cost_round_trip(index):
    c = centers(index)
    rows = [trip_row(c["Z00"], c["Z11"], path_length=4000.0)]
    cost = build_cost_matrix(pd.DataFrame(rows), index, "median", "path_length")
    df = cost_to_dataframe(cost)
    assert len(df) == 81  # dense export
    back = cost_from_dataframe(df, cost.zone_index, "median", "path_length")
    np.testing.assert_allclose(back.cells, cost.cells)
    np.testing.assert_array_equal(back.observed_mask, cost.observed_mask)
