"""Multi-year forecasts: trip ends, distributed flows, changes, comparisons."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .domain import CostMatrix, GravityModel, ODMatrix
from .tripdist import gravity_distribute
from .tripgen import predict_trips


@dataclass
class ForecastSet:
    """Per (year, day_type) trip-end vectors plus totals and changes."""

    productions: dict = field(default_factory=dict)  # (year, day_type) -> Series
    attractions: dict = field(default_factory=dict)
    totals: dict = field(default_factory=dict)  # (year, day_type) -> {production, attraction}
    diagnostics: dict = field(default_factory=dict)

    @property
    def years(self) -> list:
        return sorted({y for y, _ in self.productions})

    @property
    def day_types(self) -> list:
        return sorted({d for _, d in self.productions})

    def decadal_growth(self, day_type: str, kind: str = "production") -> dict:
        """(V_{y+10} / V_y - 1) for every year pair 10 years apart."""
        out = {}
        for y in self.years:
            if (y + 10, day_type) in self.totals and (y, day_type) in self.totals:
                base = self.totals[(y, day_type)][kind]
                if base > 0:
                    out[(y, y + 10)] = self.totals[(y + 10, day_type)][kind] / base - 1.0
        return out

    def to_dataframe(self) -> pd.DataFrame:
        rows = []
        for (year, day_type), prod in sorted(self.productions.items()):
            attr = self.attractions[(year, day_type)]
            for zone_id in prod.index:
                rows.append(
                    (year, day_type, zone_id, float(prod[zone_id]), float(attr[zone_id]))
                )
        return pd.DataFrame(
            rows, columns=["year", "day_type", "zone_id", "production", "attraction"]
        )


def forecast_generation(models: dict, sea_by_year: dict) -> ForecastSet:
    """Apply fitted generation models to every year's covariate table.

    ``models`` maps (direction, day_type) -> RegressionModel;
    ``sea_by_year`` maps year -> covariate DataFrame indexed by zone_id.
    """
    if not sea_by_year:
        raise ValueError("no SEA years supplied")
    fs = ForecastSet()
    for year in sorted(sea_by_year):
        table = sea_by_year[year]
        for (direction, day_type), model in sorted(models.items()):
            preds, diag = predict_trips(model, table)
            key = (year, day_type)
            if direction == "production":
                fs.productions[key] = preds
            else:
                fs.attractions[key] = preds
            fs.diagnostics[(year, direction, day_type)] = diag
    for key in fs.productions:
        if key not in fs.attractions:
            raise ValueError(f"missing attraction model output for {key}")
        fs.totals[key] = {
            "production": float(fs.productions[key].sum()),
            "attraction": float(fs.attractions[key].sum()),
        }
    return fs


def forecast_distribution(
    fs: ForecastSet, cost: CostMatrix, gravity: GravityModel, day_type: str
) -> dict:
    """Distribute each year's forecast trip ends with base-year costs.

    Returns year -> ODMatrix. Zone indices of the forecast tables must align
    with the cost matrix.
    """
    out = {}
    for year in fs.years:
        key = (year, day_type)
        if key not in fs.productions:
            raise ValueError(f"no forecast for year {year} {day_type}")
        prod = fs.productions[key].reindex(list(cost.zone_index))
        attr = fs.attractions[key].reindex(list(cost.zone_index))
        if prod.isna().any() or attr.isna().any():
            missing = sorted(prod.index[prod.isna()])
            raise ValueError(f"forecast lacks zones {missing[:5]}")
        cells = gravity_distribute(
            prod.to_numpy(), attr.to_numpy(), cost.cells, gravity.beta
        )
        out[year] = ODMatrix(
            zone_index=cost.zone_index, cells=cells, day_type=day_type, year=year
        )
    return out


def aggregate_flows(odm: ODMatrix, zone_to_county: dict):
    """County-level flow matrix: county cell = sum of member-zone cells."""
    unmapped = [z for z in odm.zone_index if z not in zone_to_county]
    if unmapped:
        raise ValueError(f"zones not mapped to a county: {unmapped[:5]}")
    counties = sorted({zone_to_county[z] for z in odm.zone_index})
    pos = {c: i for i, c in enumerate(counties)}
    group = np.asarray([pos[zone_to_county[z]] for z in odm.zone_index])
    m = len(counties)
    cells = np.zeros((m, m))
    np.add.at(cells, (group[:, None], group[None, :]), odm.cells)
    return ODMatrix(
        zone_index=tuple(counties), cells=cells, day_type=odm.day_type, year=odm.year
    )


def flow_change(base: ODMatrix, future: ODMatrix):
    """Cellwise absolute and percent change between two aligned matrices.

    Percent change is NaN where the base cell is zero (reported blank in
    exports, never infinity).
    """
    if base.zone_index != future.zone_index:
        raise ValueError("zone indices differ")
    absolute = future.cells - base.cells
    with np.errstate(divide="ignore", invalid="ignore"):
        percent = np.where(
            base.cells > 0, 100.0 * absolute / base.cells, np.nan
        )
    return absolute, percent


@dataclass
class ComparisonReport:
    """Predicted-vs-reference zone values: correlation, linear fit, ratios."""

    rho: float
    slope: float
    intercept: float
    ratios: pd.Series  # predicted / reference, NaN where reference <= 0
    n: int

    def summary(self) -> str:
        defined = self.ratios.dropna()
        lines = [
            f"zones compared: {self.n}",
            f"Pearson rho: {self.rho:.4f}",
            f"fit predicted = {self.intercept:.4f} + {self.slope:.4f} * reference",
            f"mean predicted/reference ratio: {defined.mean():.4f}"
            if len(defined)
            else "mean predicted/reference ratio: undefined",
        ]
        return "\n".join(lines) + "\n"


def compare_models(predicted, reference) -> ComparisonReport:
    """Pearson correlation and OLS fit of predicted on reference values."""
    pred = pd.Series(predicted).astype(float)
    ref = pd.Series(reference).astype(float)
    if isinstance(predicted, pd.Series) and isinstance(reference, pd.Series):
        ref = ref.reindex(pred.index)
    if len(pred) < 3 or len(ref) != len(pred):
        raise ValueError("need at least 3 aligned zone pairs")
    x = ref.to_numpy()
    y = pred.to_numpy()
    vx = x.var()
    if vx == 0:
        raise ValueError("reference values are constant")
    cov = ((x - x.mean()) * (y - y.mean())).mean()
    vy = y.var()
    rho = cov / np.sqrt(vx * vy) if vy > 0 else 0.0
    slope = cov / vx
    intercept = y.mean() - slope * x.mean()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = pd.Series(np.where(x > 0, y / x, np.nan), index=pred.index)
    return ComparisonReport(
        rho=float(rho), slope=float(slope), intercept=float(intercept), ratios=ratios, n=len(pred)
    )


def interpolate_years(value_a: float, year_a: int, value_b: float, year_b: int, target: int) -> float:
    """Linear interpolation between two year values; no extrapolation."""
    if year_a >= year_b:
        raise ValueError("year_a must precede year_b")
    if not year_a <= target <= year_b:
        raise ValueError(f"target year {target} outside [{year_a}, {year_b}]")
    frac = (target - year_a) / (year_b - year_a)
    return value_a + frac * (value_b - value_a)


def change_to_dataframe(zone_index, absolute: np.ndarray, percent: np.ndarray) -> pd.DataFrame:
    zones = np.asarray(zone_index, dtype=object)
    n = len(zones)
    i_idx, j_idx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    pct = percent.ravel()
    return pd.DataFrame(
        {
            "origin_zone": zones[i_idx.ravel()],
            "dest_zone": zones[j_idx.ravel()],
            "absolute_change": absolute.ravel(),
            # blank, not infinity, where the base flow is zero
            "percent_change": ["" if np.isnan(v) else v for v in pct],
        }
    )
