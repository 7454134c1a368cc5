import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import par1_model, par1_population
from periodiag.core import SeasonalSeries, from_flat
from periodiag.exceptions import DegenerateVariance
from periodiag.par import simulate_par
from periodiag.periodic_stats import (
    lag_period,
    periodic_autocovariance,
    periodic_mean,
    periodic_pacf,
)


# independent oracles -------------------------------------------------------

def textbook_acov(x, lag):
    """Sample autocovariance with overall mean and n - lag divisor."""
    n = len(x)
    xbar = sum(x) / n
    total = 0.0
    for t in range(lag, n):
        total += (x[t] - xbar) * (x[t - lag] - xbar)
    return total / (n - lag)


def durbin_levinson_pacf(acf, order):
    """PACF from autocorrelations r_0..r_order by the Durbin-Levinson recursion."""
    pacf = []
    phi_prev = []
    v = 1.0
    for k in range(1, order + 1):
        num = acf[k] - sum(phi_prev[j] * acf[k - 1 - j] for j in range(k - 1))
        a = num / v
        phi = [phi_prev[j] - a * phi_prev[k - 2 - j] for j in range(k - 1)] + [a]
        v *= 1 - a * a
        phi_prev = phi
        pacf.append(a)
    return np.array(pacf)


def regression_pacf(x, order):
    """Partial correlation via two explicit regressions on lagged columns."""
    x = np.asarray(x) - np.mean(x)
    out = []
    for k in range(1, order + 1):
        y = x[k:]
        last = x[: len(x) - k]
        inner = np.column_stack([x[k - j: len(x) - j] for j in range(1, k)]) if k > 1 else None
        if inner is not None:
            y = y - inner @ np.linalg.solve(inner.T @ inner, inner.T @ y)
            last = last - inner @ np.linalg.solve(inner.T @ inner, inner.T @ last)
        out.append(y @ last / np.sqrt((y @ y) * (last @ last)))
    return np.array(out)


# means ---------------------------------------------------------------------

def test_periodic_mean_constant_within_period():
    vals = np.tile(np.arange(1.0, 13.0), (5, 1))
    np.testing.assert_array_equal(periodic_mean(SeasonalSeries(vals)), np.arange(1.0, 13.0))


def test_periodic_mean_two_point():
    np.testing.assert_array_equal(periodic_mean(SeasonalSeries([[1, 10], [3, 20]])), [2, 15])


# autocovariance -------------------------------------------------------------

def test_lag_period_wraps():
    assert lag_period(1, 1, 12) == 12
    assert lag_period(3, 2, 12) == 1
    assert lag_period(5, 24, 12) == 5


def test_reduces_to_textbook_acov_for_s1(rng):
    x = rng.standard_normal(300).cumsum() * 0.1 + rng.standard_normal(300)
    acf = periodic_autocovariance(from_flat(x, 1), 10)
    for lag in range(11):
        assert acf.gamma[0, lag] == pytest.approx(textbook_acov(list(x), lag), abs=1e-12)
    assert acf.n_pairs[0, 3] == 297


def test_rho_equals_direct_pearson(rng):
    z = simulate_par(par1_model(rng.uniform(-0.8, 0.8, 6)), 40, seed=3)
    acf = periodic_autocovariance(z, 5)
    v = z.values
    mu = v.mean(axis=0)
    dev = (v - mu).ravel()
    for m in range(1, 7):
        for lag in range(0, 6):
            pairs = [(t, t - lag) for t in range(m - 1, dev.size, 6) if t - lag >= 0]
            a = np.array([dev[i] for i, _ in pairs])
            b = np.array([dev[j] for _, j in pairs])
            pearson = (a @ b) / np.sqrt((a @ a) * (b @ b))
            assert acf.rho[m - 1, lag] == pytest.approx(pearson, abs=1e-10)
            if lag < m:
                formula = acf.gamma[m - 1, lag] / np.sqrt(
                    acf.gamma[m - 1, 0] * acf.gamma[lag_period(m, lag, 6) - 1, 0])
                assert acf.rho[m - 1, lag] == pytest.approx(formula, abs=1e-12)


def test_cross_year_pairs_drop_first_year(rng):
    z = SeasonalSeries(rng.standard_normal((10, 4)))
    acf = periodic_autocovariance(z, 5)
    assert acf.n_pairs[0, 1] == 9
    assert acf.n_pairs[1, 1] == 10
    assert acf.n_pairs[3, 5] == 9
    v = z.values - z.values.mean(axis=0)
    direct = np.mean([v[r, 0] * v[r - 1, 3] for r in range(1, 10)])
    assert acf.gamma[0, 1] == pytest.approx(direct, abs=1e-14)


def test_common_yearly_factor_gives_unit_correlation(rng):
    x = rng.standard_normal(30)
    z = SeasonalSeries(np.repeat(x[:, None], 12, axis=1))
    acf = periodic_autocovariance(z, 1)
    np.testing.assert_allclose(acf.rho[1:, 1], 1.0, atol=1e-12)


def test_white_noise_rho_small():
    n = 200
    inside = total = 0
    for seed in range(20):
        z = SeasonalSeries(np.random.default_rng(seed).standard_normal((n, 12)))
        rho = periodic_autocovariance(z, 3).rho[:, 1:]
        inside += np.sum(np.abs(rho) < 4 / np.sqrt(n))
        total += rho.size
    assert inside / total >= 0.95


def test_par1_rho_matches_population():
    phi = np.array([0.7, -0.5, 0.3, 0.8, -0.2, 0.6, 0.1, -0.7, 0.5, 0.4, -0.3, 0.65])
    sigma2 = np.linspace(0.5, 2.0, 12)
    z = simulate_par(par1_model(phi, sigma2), 2000, seed=11)
    _, rho1 = par1_population(phi, sigma2)
    est = periodic_autocovariance(z, 1).rho[:, 1]
    se = (1 - rho1 ** 2) / np.sqrt(2000)
    assert np.all(np.abs(est - rho1) < 3 * se + 1e-3)


def test_degenerate_variance_names_period(rng):
    vals = rng.standard_normal((10, 4))
    vals[:, 2] = 5.0
    with pytest.raises(DegenerateVariance) as err:
        periodic_autocovariance(SeasonalSeries(vals), 2)
    assert err.value.period == 3


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (8, 3), elements=st.floats(-100, 100)))
def test_acf_invariants(vals):
    if np.any(np.ptp(vals, axis=0) < 1e-3):
        return
    acf = periodic_autocovariance(SeasonalSeries(vals), 4)
    np.testing.assert_allclose(acf.rho[:, 0], 1.0, atol=1e-12)
    assert np.all(np.abs(acf.rho) <= 1 + 1e-10)
    assert np.all(acf.gamma[:, 0] >= 0)


# pacf -------------------------------------------------------------------------

def test_pacf_s1_ols_matches_direct_regression(rng):
    x = simulate_par(par1_model([0.6]), 400, seed=5).flat
    ours = periodic_pacf(from_flat(x, 1), 5, method="ols").pacf[0]
    np.testing.assert_allclose(ours, regression_pacf(x, 5), atol=1e-8)


def test_pacf_s1_yule_walker_matches_durbin_levinson(rng):
    x = simulate_par(par1_model([-0.4]), 400, seed=6).flat
    g = [textbook_acov(list(x), k) for k in range(6)]
    ours = periodic_pacf(from_flat(x, 1), 5, method="yule_walker").pacf[0]
    np.testing.assert_allclose(ours, durbin_levinson_pacf(np.array(g) / g[0], 5), atol=1e-8)


def test_pacf_band():
    z = SeasonalSeries(np.random.default_rng(0).standard_normal((100, 12)))
    assert periodic_pacf(z, 2).band == pytest.approx(1.959963984540054 / 10)


def test_pacf_white_noise_rate():
    outside = total = 0
    for seed in range(100):
        z = SeasonalSeries(np.random.default_rng(seed).standard_normal((60, 12)))
        res = periodic_pacf(z, 3)
        outside += res.significant().sum()
        total += res.pacf.size
    assert 0.03 < outside / total < 0.07


def test_pacf_par1_cutoff():
    phi = np.array([0.7, -0.6, 0.5, 0.8, -0.5, 0.6, 0.55, -0.7, 0.5, 0.6, -0.6, 0.65])
    model = par1_model(phi)
    lag1 = higher = higher_total = 0
    reps = 500
    for seed in range(reps):
        res = periodic_pacf(simulate_par(model, 60, seed=seed), 3)
        sig = res.significant()
        lag1 += sig[:, 0].sum()
        higher += sig[:, 1:].sum()
        higher_total += sig[:, 1:].size
    assert lag1 / (reps * 12) > 0.99
    assert 0.03 < higher / higher_total < 0.075


def test_pacf_common_factor_is_one(rng):
    x = rng.standard_normal(30)
    z = SeasonalSeries(np.repeat(x[:, None], 4, axis=1))
    np.testing.assert_allclose(periodic_pacf(z, 1).pacf[1:, 0], 1.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["ols", "yule_walker"]))
def test_pacf_bounded(seed, method):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((15, 4)) * rng.uniform(0.1, 10, 4)
    res = periodic_pacf(SeasonalSeries(vals), 3, method=method)
    assert np.all(np.abs(res.pacf) <= 1 + 1e-10)
