"""Input parsing and zone assignment.

Owns the external file formats: ping CSV/NDJSON, zone GeoJSON, SEA and
population CSV tables. Ping CSV column order is fixed as
``device_id,lon,lat,timestamp,accuracy``; NDJSON uses the same field names.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import geo
from .domain import Ping, SeaRecord, Zone, validate

PING_COLUMNS = ("device_id", "lon", "lat", "timestamp", "accuracy")

#: header aliases accepted in SEA tables, mapped to canonical names
SEA_ALIASES = {
    "totpop": "total_population",
    "population": "total_population",
    "pop_density": "population_density",
    "density": "population_density",
    "govqtr_pct": "pct_pop_gov_quarters",
    "hh_income": "avg_hh_income",
    "income": "avg_hh_income",
    "vehicles": "avg_vehicles",
    "employed_pct": "pct_employed",
    "agcon": "pct_emp_agcon",
    "indust": "pct_emp_industry",
    "retail": "pct_emp_retail",
    "foodld": "pct_emp_foodlodging",
    "prosrv": "pct_emp_prosrv",
    "govnmt": "pct_emp_govnmt",
    "othsrv": "pct_emp_othsrv",
    # raw count columns, converted by tripgen.normalize_sea
    "emp_agcon": "emp_agcon",
    "emp_industry": "emp_industry",
    "emp_retail": "emp_retail",
    "emp_foodlodging": "emp_foodlodging",
    "emp_prosrv": "emp_prosrv",
    "emp_govnmt": "emp_govnmt",
    "emp_othsrv": "emp_othsrv",
    "employed": "employed",
    "pop_gov_quarters": "pop_gov_quarters",
}


class IngestError(Exception):
    """Fatal input problem (unreadable stream, malformed geometry, duplicate ids)."""


@dataclass
class RejectReport:
    """Per-row rejection accounting; malformed rows are never silently dropped."""

    total: int = 0
    accepted: int = 0
    reasons: dict = field(default_factory=dict)
    samples: list = field(default_factory=list)
    max_samples: int = 20

    @property
    def rejected(self) -> int:
        return self.total - self.accepted

    def reject(self, row_number: int, reason: str, raw: str):
        self.reasons[reason] = self.reasons.get(reason, 0) + 1
        if len(self.samples) < self.max_samples:
            self.samples.append({"row": row_number, "reason": reason, "raw": raw})

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "reasons": dict(sorted(self.reasons.items())),
            "samples": self.samples,
        }


def _ping_from_fields(device_id, lon, lat, timestamp, accuracy):
    try:
        lon = float(lon)
        lat = float(lat)
    except (TypeError, ValueError):
        return None, "non-numeric coordinate"
    try:
        timestamp = int(timestamp)
    except (TypeError, ValueError):
        return None, "non-integer timestamp"
    try:
        accuracy = float(accuracy)
    except (TypeError, ValueError):
        return None, "non-numeric accuracy"
    if not device_id:
        return None, "empty device_id"
    ping = Ping(str(device_id), lon, lat, timestamp, accuracy)
    violations = validate(ping)
    if violations:
        return None, violations[0]
    return ping, None


def parse_pings(stream, fmt: str = "csv"):
    """Parse a ping byte/text stream into (pings, reject report).

    Valid rows become Pings; malformed rows are counted and sampled into the
    report. An undecodable stream raises IngestError.
    """
    if not hasattr(stream, "read"):
        raise IngestError("unreadable stream")
    try:
        raw = stream.read()
    except OSError as exc:
        raise IngestError(f"unreadable stream: {exc}") from exc
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IngestError(f"stream is not UTF-8: {exc}") from exc
    else:
        text = raw

    report = RejectReport()
    pings = []
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        for i, row in enumerate(reader):
            if i == 0 and row and row[0].strip().lower() == "device_id":
                continue  # header
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            report.total += 1
            if len(row) != 5:
                report.reject(i, "wrong column count", ",".join(row))
                continue
            ping, reason = _ping_from_fields(*[c.strip() for c in row])
            if ping is None:
                report.reject(i, reason, ",".join(row))
            else:
                report.accepted += 1
                pings.append(ping)
    elif fmt == "ndjson":
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            report.total += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                report.reject(i, "invalid json", line)
                continue
            if not isinstance(obj, dict) or not set(PING_COLUMNS) <= set(obj):
                report.reject(i, "missing fields", line)
                continue
            ping, reason = _ping_from_fields(*(obj[c] for c in PING_COLUMNS))
            if ping is None:
                report.reject(i, reason, line)
            else:
                report.accepted += 1
                pings.append(ping)
    else:
        raise ValueError(f"unknown ping format: {fmt}")
    return pings, report


def serialize_pings(pings, fmt: str = "csv") -> str:
    """Inverse of parse_pings; used for round-trip checks and synth output."""
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(PING_COLUMNS)
        for p in pings:
            writer.writerow([p.device_id, repr(p.lon), repr(p.lat), p.timestamp, repr(p.accuracy)])
        return out.getvalue()
    if fmt == "ndjson":
        lines = [
            json.dumps(
                {
                    "device_id": p.device_id,
                    "lon": p.lon,
                    "lat": p.lat,
                    "timestamp": p.timestamp,
                    "accuracy": p.accuracy,
                },
                sort_keys=True,
            )
            for p in pings
        ]
        return "\n".join(lines) + ("\n" if lines else "")
    raise ValueError(f"unknown ping format: {fmt}")


# ---------------------------------------------------------------------------
# columnar ping table (fast path used by the pipeline stages)


@dataclass
class PingTable:
    """Column-oriented ping storage: one array per field, devices label-encoded."""

    device_ids: list  # unique ids, index = code
    device_code: np.ndarray  # int32 per ping
    lon: np.ndarray
    lat: np.ndarray
    ts: np.ndarray  # int64 UNIX seconds
    accuracy: np.ndarray

    def __len__(self) -> int:
        return self.ts.shape[0]

    @classmethod
    def from_pings(cls, pings) -> "PingTable":
        ids = {}
        codes = np.empty(len(pings), dtype=np.int32)
        lon = np.empty(len(pings))
        lat = np.empty(len(pings))
        ts = np.empty(len(pings), dtype=np.int64)
        acc = np.empty(len(pings))
        for i, p in enumerate(pings):
            codes[i] = ids.setdefault(p.device_id, len(ids))
            lon[i] = p.lon
            lat[i] = p.lat
            ts[i] = p.timestamp
            acc[i] = p.accuracy
        return cls(list(ids), codes, lon, lat, ts, acc)

    @classmethod
    def from_dataframe(cls, df: pd.DataFrame) -> "PingTable":
        cats = df["device_id"].astype("category")
        return cls(
            [str(c) for c in cats.cat.categories],
            cats.cat.codes.to_numpy(dtype=np.int32),
            df["lon"].to_numpy(dtype=np.float64),
            df["lat"].to_numpy(dtype=np.float64),
            df["timestamp"].to_numpy(dtype=np.int64),
            df["accuracy"].to_numpy(dtype=np.float64),
        )

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "device_id": np.asarray(self.device_ids, dtype=object)[self.device_code],
                "lon": self.lon,
                "lat": self.lat,
                "timestamp": self.ts,
                "accuracy": self.accuracy,
            }
        )

    def select(self, mask: np.ndarray) -> "PingTable":
        return PingTable(
            self.device_ids,
            self.device_code[mask],
            self.lon[mask],
            self.lat[mask],
            self.ts[mask],
            self.accuracy[mask],
        )

    def sorted_by_device_time(self) -> "PingTable":
        order = np.lexsort((self.ts, self.device_code))
        return self.select(order)

    def iter_devices(self):
        """Yield (device_id, index slice) over a device/time-sorted table."""
        if len(self) == 0:
            return
        codes = self.device_code
        starts = np.flatnonzero(np.r_[True, codes[1:] != codes[:-1]])
        bounds = np.r_[starts, len(codes)]
        for s, e in zip(bounds[:-1], bounds[1:]):
            yield self.device_ids[codes[s]], slice(int(s), int(e))


def read_pings_table(path, fmt: str = "csv") -> tuple:
    """Fast pandas-based ping reader with the same acceptance rules as parse_pings.

    Returns (PingTable, RejectReport). Reject reasons are coarser than the
    streaming parser (one combined "invalid field or range" bucket).
    """
    report = RejectReport()
    if fmt == "csv":
        df = pd.read_csv(
            path,
            names=list(PING_COLUMNS),
            header=0,
            dtype={"device_id": str},
            na_filter=False,
        )
    elif fmt == "ndjson":
        df = pd.read_json(path, lines=True, dtype={"device_id": str})
        if df.empty:
            df = pd.DataFrame(columns=list(PING_COLUMNS))
        df = df.reindex(columns=list(PING_COLUMNS))
    else:
        raise ValueError(f"unknown ping format: {fmt}")
    report.total = len(df)
    lon = pd.to_numeric(df["lon"], errors="coerce")
    lat = pd.to_numeric(df["lat"], errors="coerce")
    tsf = pd.to_numeric(df["timestamp"], errors="coerce")
    acc = pd.to_numeric(df["accuracy"], errors="coerce")
    ok = (
        lon.notna() & lat.notna() & tsf.notna() & acc.notna()
        & (df["device_id"].astype(str).str.len() > 0)
        & (tsf == np.floor(tsf)) & (tsf > 0)
        & lat.between(-90, 90) & lon.between(-180, 180) & (acc >= 0)
    ).to_numpy()
    report.accepted = int(ok.sum())
    bad = np.flatnonzero(~ok)
    for i in bad[: report.max_samples]:
        report.reject(int(i), "invalid field or range", str(df.iloc[i].to_dict()))
    if len(bad) > report.max_samples:
        report.reasons["invalid field or range"] = len(bad)
    clean = pd.DataFrame(
        {
            "device_id": df["device_id"].astype(str)[ok],
            "lon": lon[ok],
            "lat": lat[ok],
            "timestamp": tsf[ok].astype(np.int64),
            "accuracy": acc[ok],
        }
    )
    return PingTable.from_dataframe(clean), report


# ---------------------------------------------------------------------------
# zones


def _rings_from_geometry(geom) -> list:
    """Return a list of (outer, holes) per polygon part."""
    gtype = geom.get("type")
    if gtype == "Polygon":
        coords = geom["coordinates"]
        return [(coords[0], coords[1:])]
    if gtype == "MultiPolygon":
        return [(part[0], part[1:]) for part in geom["coordinates"]]
    raise IngestError(f"unsupported geometry type: {gtype}")


def load_zones(document, split_multipolygons: bool = False):
    """Parse a GeoJSON FeatureCollection into (zones, ZoneIndex).

    With split_multipolygons, each polygon part becomes its own zone
    (id suffixed ``/0``, ``/1``, ...); otherwise a multipolygon feature keeps
    its largest part's geometry for point tests of every part.
    """
    if isinstance(document, (str, bytes)):
        document = json.loads(document)
    if document.get("type") != "FeatureCollection":
        raise IngestError("expected a GeoJSON FeatureCollection")
    zones = []
    seen = set()
    for idx, feature in enumerate(document.get("features", [])):
        props = feature.get("properties") or {}
        if "zone_id" not in props:
            raise IngestError(f"feature {idx} is missing a zone_id property")
        zone_id = str(props["zone_id"])
        county_id = str(props.get("county_id", ""))
        parts = _rings_from_geometry(feature["geometry"])
        if split_multipolygons and len(parts) > 1:
            part_ids = [f"{zone_id}/{k}" for k in range(len(parts))]
        else:
            part_ids = [zone_id] if len(parts) == 1 else None
        if part_ids is None:
            # keep the feature as one zone spanning all parts
            part_ids = [zone_id]
            parts = [max(parts, key=lambda p: abs(geo.polygon_area_km2(p[0], p[1])))]
        for pid, (outer, holes) in zip(part_ids, parts):
            if pid in seen:
                raise IngestError(f"duplicate zone id: {pid}")
            seen.add(pid)
            try:
                centroid = geo.polygon_centroid(outer, holes)
            except ValueError as exc:
                raise IngestError(f"invalid ring in feature {idx}: {exc}") from exc
            zones.append(
                Zone(
                    zone_id=pid,
                    outer=tuple(tuple(pt) for pt in outer),
                    holes=tuple(tuple(tuple(pt) for pt in h) for h in holes),
                    centroid=centroid,
                    county_id=county_id,
                )
            )
    return zones, ZoneIndex(zones)


def zones_to_geojson(zones) -> dict:
    """Serialize zones back to a FeatureCollection (round-trip support)."""
    return {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"zone_id": z.zone_id, "county_id": z.county_id},
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [
                        [list(pt) for pt in z.outer],
                        *[[list(pt) for pt in h] for h in z.holes],
                    ],
                },
            }
            for z in zones
        ],
    }


class ZoneIndex:
    """Uniform-grid spatial index over zone bounding boxes.

    Lookups are boundary-inclusive; boundary hits resolve to the lowest
    zone_id. Read-only after construction.
    """

    def __init__(self, zones, cells_per_axis: int | None = None):
        self.zones = sorted(zones, key=lambda z: z.zone_id)
        n = max(len(self.zones), 1)
        self._bbox = np.empty((len(self.zones), 4))  # minlon, minlat, maxlon, maxlat
        for i, z in enumerate(self.zones):
            arr = np.asarray(z.outer)
            self._bbox[i] = (arr[:, 0].min(), arr[:, 1].min(), arr[:, 0].max(), arr[:, 1].max())
        if len(self.zones) == 0:
            self._grid = {}
            self._nx = self._ny = 1
            self._x0 = self._y0 = 0.0
            self._dx = self._dy = 1.0
            return
        self._x0 = float(self._bbox[:, 0].min())
        self._y0 = float(self._bbox[:, 1].min())
        x1 = float(self._bbox[:, 2].max())
        y1 = float(self._bbox[:, 3].max())
        k = cells_per_axis or max(1, int(math.sqrt(n)))
        self._nx = self._ny = k
        self._dx = max((x1 - self._x0) / k, 1e-12)
        self._dy = max((y1 - self._y0) / k, 1e-12)
        self._grid: dict = {}
        for i in range(len(self.zones)):
            gx0 = self._cell_x(self._bbox[i, 0])
            gx1 = self._cell_x(self._bbox[i, 2])
            gy0 = self._cell_y(self._bbox[i, 1])
            gy1 = self._cell_y(self._bbox[i, 3])
            for gx in range(gx0, gx1 + 1):
                for gy in range(gy0, gy1 + 1):
                    self._grid.setdefault((gx, gy), []).append(i)

    def _cell_x(self, lon: float) -> int:
        return min(max(int((lon - self._x0) / self._dx), 0), self._nx - 1)

    def _cell_y(self, lat: float) -> int:
        return min(max(int((lat - self._y0) / self._dy), 0), self._ny - 1)

    def candidates(self, lon: float, lat: float) -> list:
        return self._grid.get((self._cell_x(lon), self._cell_y(lat)), [])

    def assign(self, lon: float, lat: float):
        """Containing zone_id (lowest id on boundary ties) or None."""
        for i in self.candidates(lon, lat):
            b = self._bbox[i]
            if not (b[0] <= lon <= b[2] and b[1] <= lat <= b[3]):
                continue
            z = self.zones[i]
            if geo.point_in_polygon(lon, lat, z.outer, z.holes):
                return z.zone_id  # zones are sorted by id; first hit is lowest
        return None

    def assign_many(self, lons, lats) -> np.ndarray:
        """Vectorized assignment; returns an object array of zone_id or None."""
        lons = np.asarray(lons, dtype=np.float64)
        lats = np.asarray(lats, dtype=np.float64)
        out = np.full(lons.shape, None, dtype=object)
        unassigned = np.ones(lons.shape, dtype=bool)
        for i, z in enumerate(self.zones):  # sorted: first assignment is lowest id
            if not unassigned.any():
                break
            b = self._bbox[i]
            cand = (
                unassigned
                & (lons >= b[0]) & (lons <= b[2])
                & (lats >= b[1]) & (lats <= b[3])
            )
            if not cand.any():
                continue
            idx = np.flatnonzero(cand)
            hit = geo.points_in_polygon(lons[idx], lats[idx], z.outer, z.holes)
            got = idx[hit]
            out[got] = z.zone_id
            unassigned[got] = False
        return out

    def zone_by_id(self, zone_id: str):
        for z in self.zones:
            if z.zone_id == zone_id:
                return z
        return None


def assign_zone(point, index: ZoneIndex):
    """Containing zone for a (lon, lat) point, or None if outside all zones."""
    return index.assign(point[0], point[1])


# ---------------------------------------------------------------------------
# SEA and population tables


def load_sea(path_or_buffer, year: int):
    """Load one SEA CSV into SeaRecords for the given year.

    Header names map onto canonical attribute names through SEA_ALIASES.
    Missing optional attributes stay absent (never filled with zero); rows
    violating invariants are dropped.
    """
    df = pd.read_csv(path_or_buffer, dtype={"zone_id": str})
    if "zone_id" not in df.columns:
        raise IngestError("SEA table is missing a zone_id column")
    rename = {}
    for col in df.columns:
        key = col.strip().lower()
        if key in SEA_ALIASES:
            rename[col] = SEA_ALIASES[key]
        else:
            rename[col] = key
    df = df.rename(columns=rename)
    records = []
    rejected = []
    for _, row in df.iterrows():
        attrs = {}
        for col in df.columns:
            if col in ("zone_id", "county_id", "year"):
                continue
            val = row[col]
            if pd.isna(val):
                continue
            attrs[col] = float(val)
        rec = SeaRecord(zone_id=str(row["zone_id"]), year=year, attributes=attrs)
        if validate(rec):
            rejected.append(rec)
        else:
            records.append(rec)
    return records, rejected


def sea_coverage(records, zone_ids):
    """Zones present in the geometry but absent from the SEA table."""
    have = {r.zone_id for r in records}
    return sorted(set(zone_ids) - have)


def load_population(path_or_buffer) -> dict:
    """Load a county population CSV (county_id, population) into a dict."""
    df = pd.read_csv(path_or_buffer, dtype={"county_id": str})
    for col in ("county_id", "population"):
        if col not in df.columns:
            raise IngestError(f"population table is missing column {col}")
    return {
        str(r.county_id): int(r.population)
        for r in df.itertuples(index=False)
    }
