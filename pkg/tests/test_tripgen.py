"""Covariate normalization, collinearity screening, OLS with inference."""

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from gpsdemand.domain import RegressionModel, SeaRecord
from gpsdemand.tripgen import (
    correlation_screen,
    fit_ols,
    models_report,
    models_to_dataframe,
    normalize_sea,
    predict_trips,
)

# published weekday-production / weekend-attraction coefficients used as fixtures
WEEKDAY_PRODUCTION = {"intercept": -526.146, "total_population": 0.483}
WEEKEND_ATTRACTION = {"intercept": -369.917, "total_population": 0.361}


def model_from(coeffs, day_type, direction):
    names = tuple(coeffs)
    return RegressionModel(
        covariates=names,
        coefficients=tuple(coeffs.values()),
        std_errors=tuple(1.0 for _ in names),
        t_values=tuple(0.0 for _ in names),
        p_values=tuple(1.0 for _ in names),
        r2=0.0,
        adj_r2=0.0,
        f_stat=0.0,
        f_pvalue=1.0,
        n_obs=10,
        day_type=day_type,
        direction=direction,
    )


def normal_equations_ols(X, y):
    """Independent textbook OLS oracle."""
    n, p = X.shape
    xtx = X.T @ X
    beta = np.linalg.solve(xtx, X.T @ y)
    resid = y - X @ beta
    dof = n - p
    sigma2 = float(resid @ resid) / dof
    se = np.sqrt(sigma2 * np.diag(np.linalg.inv(xtx)))
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / tss
    k = p - 1
    f = (r2 / k) / ((1 - r2) / dof)
    return beta, se, r2, f


# --- normalize_sea ---------------------------------------------------------


def rec(zone_id, **attrs):
    return SeaRecord(zone_id=zone_id, year=2021, attributes=attrs)


def test_normalize_sea_counts_to_percentages():
    table, excluded = normalize_sea(
        [rec("z1", total_population=1000.0, employed=500.0, avg_hh_income=60000.0)]
    )
    assert excluded == []
    assert table.loc["z1", "pct_employed"] == 50.0
    assert table.loc["z1", "avg_hh_income"] == 60000.0
    assert table.loc["z1", "total_population"] == 1000.0


def test_normalize_sea_excludes_zero_population():
    table, excluded = normalize_sea(
        [rec("z1", total_population=0.0, employed=0.0), rec("z2", total_population=10.0)]
    )
    assert excluded == ["z1"]
    assert list(table.index) == ["z2"]


def test_normalize_sea_density_from_area():
    table, _ = normalize_sea(
        [rec("z1", total_population=500.0)], zone_areas_km2={"z1": 2.0}
    )
    assert table.loc["z1", "population_density"] == 250.0


def test_normalize_sea_existing_percentage_passes_through():
    table, _ = normalize_sea([rec("z1", total_population=100.0, pct_employed=55.5)])
    assert table.loc["z1", "pct_employed"] == 55.5


# --- correlation_screen ----------------------------------------------------


def make_corr_table(rho_target=0.61, n=40, seed=5):
    """Population and density with a chosen correlation plus an independent column."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    x = (x - x.mean()) / x.std()
    e = rng.normal(size=n)
    e = e - e.mean() - (e @ x) / (x @ x) * x  # orthogonal to x, zero mean
    e = e / e.std()
    y = rho_target * x + np.sqrt(1 - rho_target**2) * e  # sample corr exactly rho
    return pd.DataFrame(
        {
            "total_population": x,
            "population_density": y,
            "avg_hh_income": rng.normal(size=n),
        }
    )


def test_screen_flags_correlated_pair_and_drops_priority():
    table = make_corr_table()
    report = correlation_screen(table, threshold=0.5)
    flagged_pairs = {(a, b) for a, b, _ in report.flagged}
    assert ("population_density", "total_population") in flagged_pairs or (
        "total_population",
        "population_density",
    ) in flagged_pairs
    rho = next(r for a, b, r in report.flagged if "population_density" in (a, b))
    assert rho == pytest.approx(0.61, abs=1e-9)
    assert report.dropped == ["population_density"]
    assert "population_density" not in report.kept(table.columns)


def test_screen_anticorrelation_flagged():
    x = np.arange(10.0)
    table = pd.DataFrame({"a": x, "b": -x, "c": np.random.default_rng(0).normal(size=10)})
    report = correlation_screen(table, threshold=0.5, drop_priority=())
    assert any({a, b} == {"a", "b"} and r == pytest.approx(-1.0) for a, b, r in report.flagged)
    assert report.dropped == []


def test_screen_constant_covariate_reported_not_correlated():
    table = pd.DataFrame({"a": np.arange(5.0), "const": np.ones(5)})
    report = correlation_screen(table)
    assert report.constant == ["const"]
    assert "const" not in report.rho.columns


def test_screen_needs_three_zones():
    with pytest.raises(ValueError):
        correlation_screen(pd.DataFrame({"a": [1.0, 2.0]}))


def test_screen_affine_invariance():
    table = make_corr_table()
    r1 = correlation_screen(table).rho
    scaled = table.copy()
    scaled["total_population"] = 3.0 * scaled["total_population"] + 17.0
    r2 = correlation_screen(scaled).rho
    np.testing.assert_allclose(r1.to_numpy(), r2.to_numpy(), atol=1e-12)


# --- fit_ols ---------------------------------------------------------------


def test_exact_line_r2_one():
    m = fit_ols(np.array([[0.0], [1.0], [2.0]]), np.array([1.0, 3.0, 5.0]), names=["x"])
    assert m.coefficients == pytest.approx((1.0, 2.0), abs=1e-10)
    assert m.r2 == pytest.approx(1.0)


def test_ols_matches_normal_equations_oracle():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(10, 200))
        k = int(rng.integers(1, 9))
        X = rng.normal(size=(n, k))
        beta_true = rng.normal(size=k + 1)
        y = beta_true[0] + X @ beta_true[1:] + rng.normal(0, 0.5, n)
        m = fit_ols(X, y)
        Xi = np.column_stack([np.ones(n), X])
        b, se, r2, f = normal_equations_ols(Xi, y)
        np.testing.assert_allclose(m.coefficients, b, rtol=1e-8)
        np.testing.assert_allclose(m.std_errors, se, rtol=1e-8)
        assert m.r2 == pytest.approx(r2, rel=1e-8)
        assert m.f_stat == pytest.approx(f, rel=1e-8)
        # t and p internally consistent
        dof = n - k - 1
        for t, p, bi, si in zip(m.t_values, m.p_values, m.coefficients, m.std_errors):
            assert t == pytest.approx(bi / si, rel=1e-10)
            assert p == pytest.approx(2 * stats.t.sf(abs(t), dof), rel=1e-10)
        assert m.adj_r2 <= m.r2


def test_ols_residuals_orthogonal_to_design():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(50, 4))
    y = rng.normal(size=50)
    m = fit_ols(X, y)
    Xi = np.column_stack([np.ones(50), X])
    resid = y - Xi @ np.asarray(m.coefficients)
    assert np.abs(Xi.T @ resid).max() < 1e-6 * max(np.abs(y).max(), 1.0)


def test_ols_rank_deficient_names_dependent_columns():
    X = np.column_stack([np.arange(10.0), 2 * np.arange(10.0)])
    with pytest.raises(ValueError, match="rank-deficient"):
        fit_ols(X, np.arange(10.0), names=["a", "a_doubled"])


def test_ols_needs_enough_rows():
    with pytest.raises(ValueError, match="rows"):
        fit_ols(np.ones((3, 3)), np.ones(3))


def test_ols_confidence_interval_recovery_monte_carlo():
    """Refitting noisy data drawn from known coefficients recovers them
    within the 95% CI in at least 90 of 100 seeded trials (per-coefficient)."""
    b0, b1 = WEEKDAY_PRODUCTION["intercept"], WEEKDAY_PRODUCTION["total_population"]
    n = 60
    hits = np.zeros(2, dtype=int)
    for trial in range(100):
        rng = np.random.default_rng(1000 + trial)
        pop = rng.uniform(500, 5000, n)
        y = b0 + b1 * pop + rng.normal(0, 50, n)
        m = fit_ols(pop[:, None], y, names=["total_population"])
        tcrit = stats.t.ppf(0.975, n - 2)
        for i, truth in enumerate((b0, b1)):
            lo = m.coefficients[i] - tcrit * m.std_errors[i]
            hi = m.coefficients[i] + tcrit * m.std_errors[i]
            hits[i] += int(lo <= truth <= hi)
    assert (hits >= 90).all()


# --- predict_trips ---------------------------------------------------------


def test_predict_trips_spot_values():
    m = model_from(WEEKDAY_PRODUCTION, "weekday", "production")
    table = pd.DataFrame({"total_population": [2000.0]}, index=["z1"])
    preds, diag = predict_trips(m, table)
    assert preds["z1"] == pytest.approx(439.854, abs=1e-6)
    assert diag["clamped_to_zero"] == 0

    m2 = model_from(WEEKEND_ATTRACTION, "weekend", "attraction")
    preds2, _ = predict_trips(m2, pd.DataFrame({"total_population": [3000.0]}, index=["z1"]))
    assert preds2["z1"] == pytest.approx(713.083, abs=1e-6)


def test_predict_trips_clamps_negative():
    m = model_from(WEEKDAY_PRODUCTION, "weekday", "production")
    preds, diag = predict_trips(m, pd.DataFrame({"total_population": [0.0]}, index=["z"]))
    assert preds["z"] == 0.0
    assert diag["clamped_to_zero"] == 1


def test_predict_trips_missing_covariate_named():
    m = model_from(WEEKDAY_PRODUCTION, "weekday", "production")
    with pytest.raises(ValueError, match="total_population"):
        predict_trips(m, pd.DataFrame({"other": [1.0]}))


def test_predict_trips_monotone_in_positive_coefficient():
    m = model_from(WEEKDAY_PRODUCTION, "weekday", "production")
    pops = pd.DataFrame({"total_population": np.linspace(1000, 9000, 20)})
    preds, _ = predict_trips(m, pops)
    assert (np.diff(preds.to_numpy()) >= 0).all()


# --- exports ---------------------------------------------------------------


def test_models_exports():
    m = model_from(WEEKDAY_PRODUCTION, "weekday", "production")
    df = models_to_dataframe([m])
    assert set(df["covariate"]) == {"intercept", "total_population"}
    text = models_report([m])
    assert "production weekday" in text
    assert "total_population" in text
