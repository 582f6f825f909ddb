"""Trip generation: covariate normalization, correlation screening, OLS fits.

Four models are fitted (production/attraction x weekday/weekend) on zone
covariates; predictions are linear with negative values clamped to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import linalg as sla
from scipy import stats

from .domain import RegressionModel

#: count attribute -> (canonical percentage name)
_COUNT_TO_PCT = {
    "employed": "pct_employed",
    "pop_gov_quarters": "pct_pop_gov_quarters",
    "emp_agcon": "pct_emp_agcon",
    "emp_industry": "pct_emp_industry",
    "emp_retail": "pct_emp_retail",
    "emp_foodlodging": "pct_emp_foodlodging",
    "emp_prosrv": "pct_emp_prosrv",
    "emp_govnmt": "pct_emp_govnmt",
    "emp_othsrv": "pct_emp_othsrv",
}

_PASS_THROUGH = ("total_population", "avg_hh_income", "avg_vehicles")


def normalize_sea(records, zone_areas_km2: dict | None = None):
    """Build the covariate table for one year of SEA records.

    Employment (and similar) counts become percentages of population; income,
    vehicle averages, and existing percentages pass through; population
    density is computed from population / zone area when areas are supplied.
    Zones with zero population are excluded and flagged.

    Returns (DataFrame indexed by zone_id, excluded zone_id list).
    """
    rows = {}
    excluded = []
    for rec in records:
        attrs = rec.attributes
        pop = attrs.get("total_population")
        if pop is None or pop <= 0:
            excluded.append(rec.zone_id)
            continue
        row = {}
        for name in _PASS_THROUGH:
            if name in attrs:
                row[name] = attrs[name]
        for name, value in attrs.items():
            if name.startswith("pct_") or name == "population_density":
                row[name] = value
        for count_name, pct_name in _COUNT_TO_PCT.items():
            if count_name in attrs and pct_name not in row:
                row[pct_name] = 100.0 * attrs[count_name] / pop
        if "population_density" not in row and zone_areas_km2:
            area = zone_areas_km2.get(rec.zone_id)
            if area and area > 0:
                row["population_density"] = pop / area
        rows[rec.zone_id] = row
    df = pd.DataFrame.from_dict(rows, orient="index").sort_index()
    df.index.name = "zone_id"
    return df, sorted(excluded)


@dataclass
class ScreeningReport:
    """Pairwise Pearson correlations with flagged and dropped covariates."""

    rho: pd.DataFrame
    threshold: float
    flagged: list = field(default_factory=list)  # (name_a, name_b, rho)
    dropped: list = field(default_factory=list)
    constant: list = field(default_factory=list)

    def kept(self, covariates=None) -> list:
        names = list(covariates) if covariates is not None else list(self.rho.columns)
        return [c for c in names if c not in self.dropped]


def correlation_screen(
    table: pd.DataFrame,
    threshold: float = 0.5,
    drop_priority=("population_density",),
) -> ScreeningReport:
    """Flag covariate pairs with |rho| >= threshold and mark configured drops.

    Constant covariates are reported separately, not correlated. For each
    flagged pair, whichever member appears in ``drop_priority`` is dropped
    (earlier entries first); pairs with no prioritized member stay flagged
    only.
    """
    if len(table) < 3:
        raise ValueError("need at least 3 zones to screen correlations")
    variances = table.var(axis=0, ddof=0)
    constant = sorted(variances.index[variances == 0.0])
    active = table.drop(columns=constant)
    rho = active.corr(method="pearson")
    np.fill_diagonal(rho.to_numpy(), 1.0)
    flagged = []
    dropped = []
    cols = list(rho.columns)
    for a_idx in range(len(cols)):
        for b_idx in range(a_idx + 1, len(cols)):
            a, b = cols[a_idx], cols[b_idx]
            r = float(rho.iloc[a_idx, b_idx])
            if abs(r) >= threshold:
                flagged.append((a, b, r))
                for name in drop_priority:
                    if name in (a, b) and name not in dropped:
                        dropped.append(name)
                        break
    return ScreeningReport(
        rho=rho, threshold=threshold, flagged=flagged, dropped=dropped, constant=constant
    )


def fit_ols(
    X,
    y,
    names=None,
    add_intercept: bool = True,
    day_type: str = "weekday",
    direction: str = "production",
) -> RegressionModel:
    """Ordinary least squares with classical inference statistics.

    ``X`` holds the covariate columns; an intercept column is prepended
    unless ``add_intercept`` is False (in which case the first column is
    treated as the intercept).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if names is None:
        names = [f"x{i + 1}" for i in range(X.shape[1])]
    names = list(names)
    if add_intercept:
        X = np.column_stack([np.ones(n), X])
        names = ["intercept"] + names
    p = X.shape[1]
    k = p - 1  # slope covariates
    if n < p + 1:
        raise ValueError(f"need at least {p + 1} rows to fit {p} coefficients")
    rank = np.linalg.matrix_rank(X)
    if rank < p:
        _, _, piv = sla.qr(X, mode="economic", pivoting=True)
        dependent = sorted(names[i] for i in piv[rank:])
        raise ValueError(f"design matrix is rank-deficient; dependent columns: {dependent}")

    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = n - p
    rss = float(resid @ resid)
    sigma2 = rss / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_vals = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    p_vals = 2.0 * stats.t.sf(np.abs(t_vals), dof)
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / dof if dof > 0 else r2
    if k > 0 and r2 < 1.0:
        f_stat = (r2 / k) / ((1.0 - r2) / dof)
        f_pvalue = float(stats.f.sf(f_stat, k, dof))
    elif k > 0:
        f_stat = np.inf
        f_pvalue = 0.0
    else:
        f_stat = 0.0
        f_pvalue = 1.0
    return RegressionModel(
        covariates=tuple(names),
        coefficients=tuple(float(b) for b in beta),
        std_errors=tuple(float(s) for s in se),
        t_values=tuple(float(t) for t in t_vals),
        p_values=tuple(float(v) for v in p_vals),
        r2=float(r2),
        adj_r2=float(adj_r2),
        f_stat=float(f_stat),
        f_pvalue=float(f_pvalue),
        n_obs=n,
        day_type=day_type,
        direction=direction,
    )


def predict_trips(model: RegressionModel, table: pd.DataFrame):
    """Per-zone linear predictions, clamped at zero.

    Returns (predictions Series indexed like the table, diagnostics with the
    clamped-zone count).
    """
    covs = [c for c in model.covariates if c != "intercept"]
    missing = [c for c in covs if c not in table.columns]
    if missing:
        raise ValueError(f"covariate table is missing: {', '.join(missing)}")
    coef = dict(zip(model.covariates, model.coefficients))
    raw = np.full(len(table), coef.get("intercept", 0.0))
    for c in covs:
        raw = raw + coef[c] * table[c].to_numpy(dtype=np.float64)
    clamped = raw < 0
    preds = pd.Series(np.where(clamped, 0.0, raw), index=table.index, name="prediction")
    return preds, {"clamped_to_zero": int(clamped.sum())}


# ---------------------------------------------------------------------------
# exports


def models_to_dataframe(models) -> pd.DataFrame:
    rows = []
    for m in models:
        for c, b, s, t, p in zip(
            m.covariates, m.coefficients, m.std_errors, m.t_values, m.p_values
        ):
            rows.append(
                {
                    "direction": m.direction,
                    "day_type": m.day_type,
                    "covariate": c,
                    "coefficient": b,
                    "std_error": s,
                    "t": t,
                    "p": p,
                }
            )
    return pd.DataFrame(rows)


def models_report(models) -> str:
    """Fixed-width coefficient table for eyeballing, one column per model."""
    models = list(models)
    names: list = []
    for m in models:
        for c in m.covariates:
            if c not in names:
                names.append(c)
    headers = [f"{m.direction} {m.day_type}" for m in models]
    width = max([len(n) for n in names] + [12])
    colw = max(max(len(h) for h in headers) + 2, 22)
    lines = ["Covariate".ljust(width) + "".join(h.rjust(colw) for h in headers)]
    for name in names:
        cells = []
        for m in models:
            if name in m.covariates:
                i = m.covariates.index(name)
                stars = _stars(m.p_values[i])
                cells.append(f"{m.coefficients[i]:.3f}{stars} ({m.std_errors[i]:.2f})")
            else:
                cells.append("-")
        lines.append(name.ljust(width) + "".join(c.rjust(colw) for c in cells))
    lines.append(
        "adj R^2".ljust(width) + "".join(f"{m.adj_r2:.3f}".rjust(colw) for m in models)
    )
    lines.append(
        "F (prob)".ljust(width)
        + "".join(f"{m.f_stat:.1f} ({m.f_pvalue:.3g})".rjust(colw) for m in models)
    )
    return "\n".join(lines) + "\n"


def _stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""
