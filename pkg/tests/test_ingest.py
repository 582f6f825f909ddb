"""Input parsing, rejection accounting, zone loading and assignment."""

import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpsdemand.domain import Ping
from gpsdemand.ingest import (
    IngestError,
    PingTable,
    ZoneIndex,
    assign_zone,
    load_population,
    load_sea,
    load_zones,
    parse_pings,
    read_pings_table,
    sea_coverage,
    serialize_pings,
    zones_to_geojson,
)

from conftest import grid_zones

GOOD_CSV = (
    "device_id,lon,lat,timestamp,accuracy\n"
    "a,-86.8,40.0,1600000000,12.5\n"
    "b,-86.7,40.1,1600000060,30.0\n"
)


def test_parse_pings_csv():
    pings, report = parse_pings(io.StringIO(GOOD_CSV))
    assert len(pings) == 2
    assert report.total == 2 and report.accepted == 2 and report.rejected == 0
    assert pings[0] == Ping("a", -86.8, 40.0, 1600000000, 12.5)


def test_parse_pings_rejects_and_samples():
    bad = GOOD_CSV + (
        "c,-200.0,40.0,1600000000,5\n"  # lon out of range
        "d,-86.8,40.0,not_a_time,5\n"  # bad timestamp
        "e,-86.8,40.0,1600000000\n"  # wrong column count
        ",-86.8,40.0,1600000000,5\n"  # empty device id
        "f,-86.8,40.0,1600000000,-2\n"  # negative accuracy
    )
    pings, report = parse_pings(io.StringIO(bad))
    assert len(pings) == 2
    assert report.total == 7 and report.rejected == 5
    assert report.reasons == {
        "lon out of range": 1,
        "non-integer timestamp": 1,
        "wrong column count": 1,
        "empty device_id": 1,
        "negative accuracy": 1,
    }
    assert len(report.samples) == 5
    d = report.to_dict()
    assert d["rejected"] == 5


def test_parse_pings_ndjson():
    lines = (
        '{"device_id": "a", "lon": -86.8, "lat": 40.0, "timestamp": 1600000000, "accuracy": 5.0}\n'
        "not json\n"
        '{"device_id": "a", "lon": -86.8}\n'
    )
    pings, report = parse_pings(io.StringIO(lines), fmt="ndjson")
    assert len(pings) == 1
    assert report.reasons == {"invalid json": 1, "missing fields": 1}


def test_parse_pings_bad_stream():
    with pytest.raises(IngestError):
        parse_pings("not a stream")
    with pytest.raises(IngestError):
        parse_pings(io.BytesIO(b"\xff\xfe\x01"))


def test_parse_pings_unknown_format():
    with pytest.raises(ValueError):
        parse_pings(io.StringIO(""), fmt="parquet")


ping_strategy = st.builds(
    Ping,
    device_id=st.text(
        alphabet=st.characters(whitelist_categories=("L", "N")), min_size=1, max_size=8
    ),
    lon=st.floats(-180, 180, allow_nan=False),
    lat=st.floats(-90, 90, allow_nan=False),
    timestamp=st.integers(1, 2_000_000_000),
    accuracy=st.floats(0, 500, allow_nan=False),
)


@settings(max_examples=40, deadline=None)
@given(st.lists(ping_strategy, max_size=20), st.sampled_from(["csv", "ndjson"]))
def test_serialize_parse_round_trip(pings, fmt):
    text = serialize_pings(pings, fmt)
    back, report = parse_pings(io.StringIO(text), fmt)
    assert report.rejected == 0
    assert back == pings


def test_read_pings_table_matches_streaming_parser(tmp_path):
    bad = GOOD_CSV + "c,-200.0,40.0,1600000000,5\nd,-86.8,40.0,xyz,5\n"
    path = tmp_path / "pings.csv"
    path.write_text(bad)
    table, report = read_pings_table(path)
    pings, stream_report = parse_pings(io.StringIO(bad))
    assert report.total == stream_report.total
    assert report.accepted == stream_report.accepted
    df = table.to_dataframe()
    assert list(df["device_id"]) == [p.device_id for p in pings]
    np.testing.assert_allclose(df["lon"], [p.lon for p in pings])


def test_ping_table_round_trip_and_iteration():
    pings = [
        Ping("b", -86.7, 40.1, 200, 5.0),
        Ping("a", -86.8, 40.0, 100, 5.0),
        Ping("b", -86.7, 40.1, 100, 5.0),
    ]
    table = PingTable.from_pings(pings).sorted_by_device_time()
    groups = {d: table.ts[sl].tolist() for d, sl in table.iter_devices()}
    assert groups == {"a": [100], "b": [100, 200]}
    assert len(table) == 3


def zone_doc():
    return json.dumps(zones_to_geojson(grid_zones(2, 2, cell=1.0, lon0=0.0, lat0=0.0)))


def test_load_zones_and_round_trip():
    zones, index = load_zones(zone_doc())
    assert [z.zone_id for z in index.zones] == ["Z00", "Z01", "Z10", "Z11"]
    z = index.zone_by_id("Z00")
    assert z.centroid == pytest.approx((0.5, 0.5))


def test_load_zones_duplicate_id():
    doc = json.loads(zone_doc())
    doc["features"].append(doc["features"][0])
    with pytest.raises(IngestError, match="duplicate"):
        load_zones(json.dumps(doc))


def test_load_zones_missing_zone_id():
    doc = json.loads(zone_doc())
    del doc["features"][0]["properties"]["zone_id"]
    with pytest.raises(IngestError, match="zone_id"):
        load_zones(json.dumps(doc))


def test_load_zones_multipolygon_split():
    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"zone_id": "M", "county_id": "c"},
                "geometry": {
                    "type": "MultiPolygon",
                    "coordinates": [
                        [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]],
                        [[[5, 5], [6, 5], [6, 6], [5, 6], [5, 5]]],
                    ],
                },
            }
        ],
    }
    zones, _ = load_zones(json.dumps(doc), split_multipolygons=True)
    assert [z.zone_id for z in zones] == ["M/0", "M/1"]
    merged, _ = load_zones(json.dumps(doc))
    assert [z.zone_id for z in merged] == ["M"]


def test_zone_assignment_interior_and_outside():
    _, index = load_zones(zone_doc())
    assert index.assign(0.5, 0.5) == "Z00"
    assert index.assign(1.5, 0.5) == "Z10"
    assert index.assign(0.5, 1.5) == "Z01"
    assert index.assign(9.0, 9.0) is None
    assert assign_zone((1.5, 1.5), index) == "Z11"


def test_zone_assignment_shared_edge_goes_to_lowest_id():
    _, index = load_zones(zone_doc())
    # the x = 1 edge is shared between Z00/Z10 (and Z01/Z11 above)
    assert index.assign(1.0, 0.5) == "Z00"
    assert index.assign(1.0, 1.5) == "Z01"
    assert index.assign(1.0, 1.0) == "Z00"  # four-corner point


def test_assign_many_matches_scalar():
    _, index = load_zones(zone_doc())
    rng = np.random.default_rng(4)
    lons = rng.uniform(-0.5, 2.5, 300)
    lats = rng.uniform(-0.5, 2.5, 300)
    many = index.assign_many(lons, lats)
    single = [index.assign(x, y) for x, y in zip(lons, lats)]
    assert list(many) == single


def test_load_sea_aliases_and_absent_values(tmp_path):
    path = tmp_path / "sea.csv"
    path.write_text(
        "zone_id,TotPop,hh_income,employed_pct,retail\n"
        "z1,1000,52000,55.0,12.0\n"
        "z2,500,,,\n"
        "z3,-10,1,1,1\n"
    )
    records, rejected = load_sea(path, 2021)
    assert [r.zone_id for r in records] == ["z1", "z2"]
    assert records[0].attributes["total_population"] == 1000
    assert records[0].attributes["pct_employed"] == 55.0
    assert records[0].attributes["pct_emp_retail"] == 12.0
    # missing cells are absent, never zero
    assert set(records[1].attributes) == {"total_population"}
    assert [r.zone_id for r in rejected] == ["z3"]
    assert sea_coverage(records, ["z1", "z2", "z9"]) == ["z9"]


def test_load_population(tmp_path):
    path = tmp_path / "pop.csv"
    path.write_text("county_id,population\nc1,1000\nc2,250\n")
    assert load_population(path) == {"c1": 1000, "c2": 250}
    bad = tmp_path / "bad.csv"
    bad.write_text("county_id,people\nc1,5\n")
    with pytest.raises(IngestError):
        load_population(bad)
