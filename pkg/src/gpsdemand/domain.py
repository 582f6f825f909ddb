"""Shared value types for the pipeline and their invariant checks.

No I/O here; file formats live with the modules that own them. All types are
immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernels import haversine_m

WEEKDAY = "weekday"
WEEKEND = "weekend"
DAY_TYPES = (WEEKDAY, WEEKEND)

#: canonical socioeconomic attribute names, in canonical order
SEA_ATTRIBUTES = (
    "total_population",
    "population_density",
    "pct_pop_gov_quarters",
    "avg_hh_income",
    "avg_vehicles",
    "pct_employed",
    "pct_emp_agcon",
    "pct_emp_industry",
    "pct_emp_retail",
    "pct_emp_foodlodging",
    "pct_emp_prosrv",
    "pct_emp_govnmt",
    "pct_emp_othsrv",
)

_PCT_ATTRIBUTES = tuple(a for a in SEA_ATTRIBUTES if a.startswith("pct_"))


@dataclass(frozen=True, slots=True)
class Ping:
    """One timestamped, accuracy-tagged GPS fix of one device."""

    device_id: str
    lon: float
    lat: float
    timestamp: int
    accuracy: float


@dataclass(frozen=True)
class Zone:
    """A traffic analysis zone: polygon geometry plus county membership."""

    zone_id: str
    outer: tuple  # closed lon/lat ring
    holes: tuple = ()
    centroid: tuple = (0.0, 0.0)  # (lon, lat)
    county_id: str = ""


@dataclass(frozen=True)
class SeaRecord:
    """Zone-year socioeconomic attributes (missing attributes simply absent)."""

    zone_id: str
    year: int
    attributes: dict


@dataclass(frozen=True, slots=True)
class StayPoint:
    """A dwell episode of one device."""

    device_id: str
    lon: float
    lat: float
    arrival: int
    departure: int
    ping_count: int


@dataclass(frozen=True, slots=True)
class Trip:
    """Movement between two consecutive stay points."""

    device_id: str
    origin_stay: StayPoint
    dest_stay: StayPoint
    depart: int
    arrive: int
    travel_time: float
    path_length: float
    day_type: str
    weight: float = 1.0


@dataclass(frozen=True)
class ODMatrix:
    """Zone-indexed square matrix of (weighted) trip counts with marginals."""

    zone_index: tuple
    cells: np.ndarray
    day_type: str
    year: int
    production: np.ndarray = field(default=None)  # type: ignore[assignment]
    attraction: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        object.__setattr__(self, "cells", cells)
        if self.production is None:
            object.__setattr__(self, "production", cells.sum(axis=1))
        if self.attraction is None:
            object.__setattr__(self, "attraction", cells.sum(axis=0))

    @property
    def n(self) -> int:
        return len(self.zone_index)


#: per-cell provenance values for CostMatrix
OBSERVED = "observed"
FALLBACK = "fallback"

COST_METRICS = ("travel_time", "path_length")
COST_STATS = ("mean", "median")


@dataclass(frozen=True)
class CostMatrix:
    """Interzonal impedances (seconds or meters) with per-cell provenance."""

    zone_index: tuple
    cells: np.ndarray
    stat: str  # mean | median
    metric: str  # travel_time | path_length
    observed_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "cells", np.asarray(self.cells, dtype=np.float64))
        if self.observed_mask is None:
            object.__setattr__(
                self, "observed_mask", np.ones(self.cells.shape, dtype=bool)
            )

    @property
    def aggregation(self) -> str:
        return f"{self.stat}_{self.metric}"


@dataclass(frozen=True)
class RegressionModel:
    """Fitted trip-generation coefficients with inference statistics."""

    covariates: tuple  # names, intercept first
    coefficients: tuple
    std_errors: tuple
    t_values: tuple
    p_values: tuple
    r2: float
    adj_r2: float
    f_stat: float
    f_pvalue: float
    n_obs: int
    day_type: str = WEEKDAY
    direction: str = "production"  # production | attraction

    def to_dict(self) -> dict:
        return {
            "schema": "gpsdemand.regression_model/1",
            "direction": self.direction,
            "day_type": self.day_type,
            "n_obs": self.n_obs,
            "r2": self.r2,
            "adj_r2": self.adj_r2,
            "f_stat": self.f_stat,
            "f_pvalue": self.f_pvalue,
            "terms": [
                {"covariate": c, "coefficient": b, "std_error": s, "t": t, "p": p}
                for c, b, s, t, p in zip(
                    self.covariates,
                    self.coefficients,
                    self.std_errors,
                    self.t_values,
                    self.p_values,
                )
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionModel":
        terms = d["terms"]
        return cls(
            covariates=tuple(t["covariate"] for t in terms),
            coefficients=tuple(t["coefficient"] for t in terms),
            std_errors=tuple(t["std_error"] for t in terms),
            t_values=tuple(t["t"] for t in terms),
            p_values=tuple(t["p"] for t in terms),
            r2=d["r2"],
            adj_r2=d["adj_r2"],
            f_stat=d["f_stat"],
            f_pvalue=d["f_pvalue"],
            n_obs=d["n_obs"],
            day_type=d["day_type"],
            direction=d["direction"],
        )


@dataclass(frozen=True)
class GravityModel:
    """Calibrated gravity exponent bound to a cost-aggregation choice."""

    beta: float
    stat: str
    metric: str
    day_type: str
    grid_betas: tuple = ()
    grid_mses: tuple = ()

    def to_dict(self) -> dict:
        return {
            "schema": "gpsdemand.gravity_model/1",
            "beta": self.beta,
            "stat": self.stat,
            "metric": self.metric,
            "day_type": self.day_type,
            "grid": [
                {"beta": b, "mse": m} for b, m in zip(self.grid_betas, self.grid_mses)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GravityModel":
        return cls(
            beta=d["beta"],
            stat=d["stat"],
            metric=d["metric"],
            day_type=d["day_type"],
            grid_betas=tuple(g["beta"] for g in d["grid"]),
            grid_mses=tuple(g["mse"] for g in d["grid"]),
        )


@dataclass(frozen=True)
class RegionStats:
    """Detected homes vs census population of one region."""

    detected_homes: int
    population: int
    ratio: Optional[float]  # None when population == 0


@dataclass(frozen=True)
class RepresentativenessTable:
    """region_id (county) -> detected homes, population, ratio r."""

    regions: dict  # region_id -> RegionStats

    def ratio(self, region_id: str) -> Optional[float]:
        stats = self.regions.get(region_id)
        return None if stats is None else stats.ratio


@dataclass(frozen=True)
class HomeEstimate:
    """A device's inferred home location with its zone/county assignment."""

    device_id: str
    lon: float
    lat: float
    zone_id: Optional[str]
    county_id: Optional[str]
    nights: int


# ---------------------------------------------------------------------------
# validation


def _check(violations, ok, message):
    if not ok:
        violations.append(message)


def validate(record) -> list:
    """Check a domain value against its invariants.

    Returns the list of violated invariants; an empty list means pass.
    Validation never raises; callers decide what to do with violations.
    """
    v: list = []
    if isinstance(record, Ping):
        _check(v, -90.0 <= record.lat <= 90.0, "lat out of range")
        _check(v, -180.0 <= record.lon <= 180.0, "lon out of range")
        _check(v, record.accuracy >= 0.0, "negative accuracy")
        _check(v, record.timestamp > 0, "non-positive timestamp")
    elif isinstance(record, Zone):
        try:
            arr = np.asarray(record.outer, dtype=np.float64)
            _check(v, arr.ndim == 2 and arr.shape[0] >= 4, "ring too short")
            if arr.ndim == 2 and arr.shape[0] >= 2:
                _check(v, (arr[0] == arr[-1]).all(), "ring not closed")
                lo = arr.min(axis=0)
                hi = arr.max(axis=0)
                _check(
                    v,
                    lo[0] <= record.centroid[0] <= hi[0]
                    and lo[1] <= record.centroid[1] <= hi[1],
                    "centroid outside bounding box",
                )
        except (TypeError, ValueError):
            v.append("malformed ring")
    elif isinstance(record, SeaRecord):
        attrs = record.attributes
        if "total_population" in attrs:
            _check(v, attrs["total_population"] >= 0, "negative total_population")
        for name in _PCT_ATTRIBUTES:
            if name in attrs:
                _check(v, 0.0 <= attrs[name] <= 100.0, f"{name} outside [0, 100]")
    elif isinstance(record, StayPoint):
        _check(v, record.departure >= record.arrival, "departure before arrival")
        _check(v, record.ping_count >= 2, "fewer than 2 pings")
    elif isinstance(record, Trip):
        _check(v, record.travel_time >= 0, "negative travel time")
        _check(
            v,
            record.travel_time == record.arrive - record.depart,
            "travel_time != arrive - depart",
        )
        direct = float(
            haversine_m(
                record.origin_stay.lon,
                record.origin_stay.lat,
                record.dest_stay.lon,
                record.dest_stay.lat,
            )
        )
        _check(
            v,
            record.path_length >= direct - 1e-6,
            "path_length below great-circle distance",
        )
        _check(v, record.day_type in DAY_TYPES, "unknown day_type")
        _check(v, record.weight > 0, "non-positive weight")
    elif isinstance(record, ODMatrix):
        cells = record.cells
        _check(v, cells.shape == (record.n, record.n), "cells not n x n")
        _check(v, (cells >= 0).all(), "negative cell")
        if cells.shape == (record.n, record.n):
            scale = max(abs(cells).sum(), 1.0)
            _check(
                v,
                np.allclose(record.production, cells.sum(axis=1), rtol=1e-9, atol=1e-9 * scale),
                "marginal mismatch: production",
            )
            _check(
                v,
                np.allclose(record.attraction, cells.sum(axis=0), rtol=1e-9, atol=1e-9 * scale),
                "marginal mismatch: attraction",
            )
            _check(
                v,
                abs(record.production.sum() - record.attraction.sum())
                <= 1e-9 * scale,
                "marginal mismatch: totals",
            )
    elif isinstance(record, CostMatrix):
        _check(v, (record.cells > 0).all(), "non-positive cost cell")
        _check(v, record.stat in COST_STATS, "unknown aggregation stat")
        _check(v, record.metric in COST_METRICS, "unknown aggregation metric")
        _check(
            v,
            record.observed_mask.shape == record.cells.shape,
            "provenance shape mismatch",
        )
    elif isinstance(record, RegressionModel):
        k = len(record.covariates)
        same_len = all(
            len(x) == k
            for x in (
                record.coefficients,
                record.std_errors,
                record.t_values,
                record.p_values,
            )
        )
        _check(v, same_len, "statistic list length mismatch")
        _check(v, record.adj_r2 <= 1.0, "adjusted R^2 above 1")
        _check(v, record.f_stat >= 0.0, "negative F")
    elif isinstance(record, GravityModel):
        _check(v, record.beta > 0, "non-positive beta")
        betas = np.asarray(record.grid_betas, dtype=np.float64)
        if betas.size:
            _check(v, (np.diff(betas) > 0).all(), "calibration grid not increasing")
            _check(
                v,
                betas[0] - 1e-12 <= record.beta <= betas[-1] + 1e-12,
                "beta outside search range",
            )
    elif isinstance(record, RepresentativenessTable):
        for region_id, stats in record.regions.items():
            if stats.population > 0:
                _check(
                    v,
                    stats.ratio is not None
                    and abs(stats.ratio - stats.detected_homes / stats.population) < 1e-12,
                    f"ratio mismatch for region {region_id}",
                )
            else:
                _check(v, stats.ratio is None, f"ratio defined for empty region {region_id}")
    elif isinstance(record, HomeEstimate):
        _check(v, record.nights >= 1, "no supporting nights")
    else:
        v.append(f"unknown record type {type(record).__name__}")
    return v
