"""Domain value types: invariant validation and serialization round-trips."""

import numpy as np
import pytest

from gpsdemand.domain import (
    CostMatrix,
    GravityModel,
    HomeEstimate,
    ODMatrix,
    Ping,
    RegionStats,
    RegressionModel,
    RepresentativenessTable,
    SeaRecord,
    StayPoint,
    Trip,
    Zone,
    validate,
)


def good_ping(**kw):
    base = dict(device_id="d", lon=-86.8, lat=40.0, timestamp=1_600_000_000, accuracy=10.0)
    base.update(kw)
    return Ping(**base)


def test_ping_valid():
    assert validate(good_ping()) == []


@pytest.mark.parametrize(
    "kw,msg",
    [
        (dict(lat=91.0), "lat out of range"),
        (dict(lon=-181.0), "lon out of range"),
        (dict(accuracy=-1.0), "negative accuracy"),
        (dict(timestamp=0), "non-positive timestamp"),
    ],
)
def test_ping_invalid(kw, msg):
    assert msg in validate(good_ping(**kw))


def test_zone_validation():
    ring = ((0, 0), (1, 0), (1, 1), (0, 1), (0, 0))
    ok = Zone(zone_id="z", outer=ring, centroid=(0.5, 0.5))
    assert validate(ok) == []
    open_ring = ((0, 0), (1, 0), (1, 1), (0, 1))
    assert "ring not closed" in validate(Zone(zone_id="z", outer=open_ring, centroid=(0.5, 0.5)))
    assert "centroid outside bounding box" in validate(
        Zone(zone_id="z", outer=ring, centroid=(2.0, 2.0))
    )


def test_sea_record_validation():
    ok = SeaRecord(zone_id="z", year=2021, attributes={"total_population": 10.0, "pct_employed": 55.0})
    assert validate(ok) == []
    bad = SeaRecord(zone_id="z", year=2021, attributes={"pct_employed": 120.0})
    assert validate(bad) == ["pct_employed outside [0, 100]"]
    neg = SeaRecord(zone_id="z", year=2021, attributes={"total_population": -5.0})
    assert validate(neg) == ["negative total_population"]
    # absent attributes are not violations
    assert validate(SeaRecord(zone_id="z", year=2021, attributes={})) == []


def stay(lon=-86.8, lat=40.0, arrival=0, departure=700, ping_count=3):
    return StayPoint("d", lon, lat, arrival, departure, ping_count)


def test_stay_validation():
    assert validate(stay()) == []
    assert "departure before arrival" in validate(stay(arrival=10, departure=5))
    assert "fewer than 2 pings" in validate(stay(ping_count=1))


def test_trip_validation():
    o = stay()
    d = stay(lon=-86.7, arrival=1000, departure=1800)
    t = Trip("d", o, d, depart=700, arrive=1000, travel_time=300,
             path_length=9000.0, day_type="weekday", weight=2.0)
    assert validate(t) == []
    short = Trip("d", o, d, depart=700, arrive=1000, travel_time=300,
                 path_length=10.0, day_type="weekday", weight=2.0)
    assert "path_length below great-circle distance" in validate(short)
    bad_day = Trip("d", o, d, depart=700, arrive=1000, travel_time=300,
                   path_length=9000.0, day_type="holiday", weight=2.0)
    assert "unknown day_type" in validate(bad_day)


def test_odmatrix_autocomputes_marginals():
    cells = np.array([[1.0, 2.0], [3.0, 4.0]])
    odm = ODMatrix(zone_index=("a", "b"), cells=cells, day_type="weekday", year=2021)
    np.testing.assert_allclose(odm.production, [3.0, 7.0])
    np.testing.assert_allclose(odm.attraction, [4.0, 6.0])
    assert validate(odm) == []
    neg = ODMatrix(zone_index=("a", "b"), cells=-cells, day_type="weekday", year=2021)
    assert "negative cell" in validate(neg)


def test_cost_matrix_validation():
    ok = CostMatrix(zone_index=("a", "b"), cells=np.ones((2, 2)), stat="median", metric="path_length")
    assert validate(ok) == []
    assert ok.aggregation == "median_path_length"
    zero = CostMatrix(zone_index=("a", "b"), cells=np.zeros((2, 2)), stat="median", metric="path_length")
    assert "non-positive cost cell" in validate(zero)
    bad = CostMatrix(zone_index=("a",), cells=np.ones((1, 1)), stat="max", metric="path_length")
    assert "unknown aggregation stat" in validate(bad)


def test_regression_model_round_trip():
    m = RegressionModel(
        covariates=("intercept", "total_population"),
        coefficients=(-526.146, 0.483),
        std_errors=(10.0, 0.01),
        t_values=(-52.6, 48.3),
        p_values=(0.0, 0.0),
        r2=0.9,
        adj_r2=0.89,
        f_stat=100.0,
        f_pvalue=0.0,
        n_obs=100,
        day_type="weekday",
        direction="production",
    )
    assert validate(m) == []
    assert RegressionModel.from_dict(m.to_dict()) == m


def test_gravity_model_round_trip_and_validation():
    g = GravityModel(
        beta=0.2, stat="median", metric="path_length", day_type="weekday",
        grid_betas=(0.1, 0.2, 0.3), grid_mses=(3.0, 1.0, 2.0),
    )
    assert validate(g) == []
    assert GravityModel.from_dict(g.to_dict()) == g
    outside = GravityModel(beta=5.0, stat="median", metric="path_length",
                           day_type="weekday", grid_betas=(0.1, 0.2), grid_mses=(1.0, 2.0))
    assert "beta outside search range" in validate(outside)


def test_representativeness_table():
    t = RepresentativenessTable(
        regions={
            "c1": RegionStats(detected_homes=3, population=100, ratio=0.03),
            "c0": RegionStats(detected_homes=0, population=0, ratio=None),
        }
    )
    assert t.ratio("c1") == 0.03
    assert t.ratio("c0") is None
    assert t.ratio("missing") is None
    assert validate(t) == []


def test_home_estimate_fields():
    h = HomeEstimate(device_id="d", lon=-86.8, lat=40.0, zone_id="z", county_id="c", nights=4)
    assert h.nights == 4
