"""Sample periodic moments and periodic partial autocorrelations.

All tables are stored 0-based: row ``m - 1`` holds period ``m``.  A lag
``l`` from period ``m`` is resolved through linear time, so it may land in
an earlier year; years whose lagged observation precedes the sample are
dropped from the sum and the divisor.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ._validation import check_series
from .exceptions import DegenerateVariance, SingularFit, TooShort

__all__ = [
    "PeriodicAcf",
    "PeriodicPacf",
    "periodic_mean",
    "periodic_autocovariance",
    "periodic_pacf",
    "lag_period",
]


@dataclass(frozen=True, eq=False)
class PeriodicAcf:
    """Periodic autocovariances ``gamma[m-1, l]`` and correlations ``rho``."""

    s: int
    max_lag: int
    gamma: np.ndarray
    rho: np.ndarray
    mu: np.ndarray
    n_pairs: np.ndarray


@dataclass(frozen=True, eq=False)
class PeriodicPacf:
    """Periodic partial autocorrelations ``pacf[m-1, k-1]`` for k = 1..P."""

    s: int
    max_order: int
    pacf: np.ndarray
    band: float

    def significant(self):
        return np.abs(self.pacf) > self.band


def lag_period(m, lag, s):
    """Period (1-based) reached by going ``lag`` steps back from period ``m``."""
    return (m - 1 - lag) % s + 1


def _period_index(s, n_years, m):
    # 0-based flat positions of period m in every year
    return np.arange(n_years) * s + (m - 1)


def periodic_mean(series):
    """Per-period sample means, ``mu[m-1] = mean over years of z[r, m]``."""
    series = check_series(series)
    return series.values.mean(axis=0)


def deviations(series):
    """Flat, period-mean-corrected observations."""
    return (series.values - series.values.mean(axis=0)).reshape(-1)


def periodic_autocovariance(series, max_lag):
    """Sample periodic autocovariance and autocorrelation tables.

    ``gamma[m-1, l]`` averages ``(z_t - mu_m)(z_{t-l} - mu_{m'})`` over the
    years where ``t - l >= 1``; the number of terms is kept in ``n_pairs``.
    ``rho[m-1, l]`` normalizes by the two variances taken over the same
    paired years, which equals ``gamma[m-1, l] / sqrt(gamma[m-1, 0] *
    gamma[m'-1, 0])`` whenever every year pairs (``l < m``) and keeps
    ``|rho| <= 1`` when the first year drops out.

    Raises
    ------
    DegenerateVariance
        If some period has zero sample variance.
    """
    series = check_series(series)
    s, n_years = series.s, series.n_years
    if max_lag < 0 or max_lag >= len(series):
        raise TooShort(f"max_lag must lie in 0..{len(series) - 1}")
    dev = deviations(series)
    gamma = np.zeros((s, max_lag + 1))
    rho = np.zeros((s, max_lag + 1))
    n_pairs = np.zeros((s, max_lag + 1), dtype=int)
    var = series.values.var(axis=0)
    zero = np.flatnonzero(var <= 0)
    if zero.size:
        raise DegenerateVariance(int(zero[0]) + 1)
    for m in range(1, s + 1):
        idx = _period_index(s, n_years, m)
        for lag in range(max_lag + 1):
            i = idx[idx - lag >= 0]
            a, b = dev[i], dev[i - lag]
            cross = np.dot(a, b)
            n_pairs[m - 1, lag] = i.size
            gamma[m - 1, lag] = cross / i.size
            rho[m - 1, lag] = cross / np.sqrt(np.dot(a, a) * np.dot(b, b))
    return PeriodicAcf(s, max_lag, gamma, rho, series.values.mean(axis=0), n_pairs)


def lagged_design(dev, s, n_years, m, lags, min_lag=None):
    """Response and lag matrix for period ``m`` over years with full windows.

    ``min_lag`` (default ``max(lags)``) is the window depth that decides
    which years are usable, so designs with different lag subsets can share
    one sample.
    """
    lags = np.asarray(lags, dtype=int)
    if min_lag is None:
        min_lag = int(lags.max()) if lags.size else 0
    idx = _period_index(s, n_years, m)
    idx = idx[idx - min_lag >= 0]
    X = dev[idx[:, None] - lags[None, :]] if lags.size else np.empty((idx.size, 0))
    return dev[idx], X


def _partial_corr_ols(y, X, m, k):
    # partial correlation of y and X[:, -1] given X[:, :-1], by residualizing
    inner = X[:, :-1]
    last = X[:, -1]
    if inner.shape[1]:
        if np.linalg.matrix_rank(inner) < inner.shape[1]:
            raise SingularFit(f"singular design for period {m}, order {k}")
        coef_y, *_ = np.linalg.lstsq(inner, y, rcond=None)
        coef_x, *_ = np.linalg.lstsq(inner, last, rcond=None)
        y = y - inner @ coef_y
        last = last - inner @ coef_x
    denom = np.sqrt(np.dot(y, y) * np.dot(last, last))
    if denom <= 1e-12 * max(1.0, np.dot(X[:, -1], X[:, -1])):
        raise SingularFit(f"singular design for period {m}, order {k}")
    return float(np.dot(y, last) / denom)


def _joint_cov(acf, m, k):
    # covariance of (z_t, z_{t-1}, ..., z_{t-k}) for t in period m
    s = acf.s
    C = np.empty((k + 1, k + 1))
    for i in range(k + 1):
        pi = lag_period(m, i, s)
        for j in range(i, k + 1):
            C[i, j] = C[j, i] = acf.gamma[pi - 1, j - i]
    return C


def periodic_pacf(series, max_order, method="ols", alpha=0.05):
    """Periodic partial autocorrelation function.

    ``pacf[m-1, k-1]`` is the partial correlation between ``z_t`` (period
    ``m``) and ``z_{t-k}`` given the ``k - 1`` observations in between.

    Parameters
    ----------
    series : SeasonalSeries or array_like
    max_order : int
    method : {"ols", "yule_walker"}
        ``ols`` regresses the mean-corrected data per period on the
        intermediate lags and correlates the two residual vectors.
        ``yule_walker`` inverts the joint covariance assembled from the
        sample periodic autocovariances; for ``s = 1`` it coincides with the
        Durbin-Levinson recursion.
    alpha : float
        Two-sided level of the white-noise band ``z_{1-alpha/2} / sqrt(N)``.
    """
    series = check_series(series)
    s, n_years = series.s, series.n_years
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    if max_order * s >= len(series) - 1:
        raise TooShort(f"max_order={max_order} too large for {len(series)} observations")
    pacf = np.empty((s, max_order))
    if method == "ols":
        dev = deviations(series)
        for m in range(1, s + 1):
            for k in range(1, max_order + 1):
                y, X = lagged_design(dev, s, n_years, m, np.arange(1, k + 1))
                if y.size <= k:
                    raise TooShort(f"period {m}, order {k}: only {y.size} usable years")
                pacf[m - 1, k - 1] = _partial_corr_ols(y, X, m, k)
    elif method == "yule_walker":
        acf = periodic_autocovariance(series, max_order)
        for m in range(1, s + 1):
            for k in range(1, max_order + 1):
                C = _joint_cov(acf, m, k)
                try:
                    P = np.linalg.inv(C)
                except np.linalg.LinAlgError:
                    raise SingularFit(f"singular covariance for period {m}, order {k}") from None
                pacf[m - 1, k - 1] = -P[0, k] / np.sqrt(P[0, 0] * P[k, k])
    else:
        raise ValueError(f"unknown method {method!r}")
    band = float(norm.ppf(1 - alpha / 2) / np.sqrt(n_years))
    return PeriodicPacf(s, max_order, pacf, band)
