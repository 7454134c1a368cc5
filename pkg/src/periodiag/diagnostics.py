"""Residual diagnostics: periodic residual autocorrelation test and Ljung-Box.

The periodic test pools the lag-one residual autocorrelations of each
period,

    S = sum_m N_m * r_m(1)**2,

which is approximately chi-squared on ``s`` degrees of freedom when the
fitted (non-periodic) model is adequate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SeasonalSeries
from .exceptions import DegenerateVariance, InsufficientLags, TooShort

__all__ = [
    "DiagnosticReport",
    "chi2_upper_tail",
    "gammainc_lower",
    "gammainc_upper",
    "residual_grid",
    "residual_periodic_acf",
    "s_statistic",
    "ljung_box",
]

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _gser(a, x):
    # P(a, x) by its power series; converges quickly for x < a + 1
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gcf(a, x):
    # Q(a, x) by modified Lentz evaluation of the continued fraction
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma function ``P(a, x)``."""
    if a <= 0 or x < 0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _gser(a, x)
    return 1.0 - _gcf(a, x)


def gammainc_upper(a, x):
    """Regularized upper incomplete gamma function ``Q(a, x) = 1 - P(a, x)``."""
    if a <= 0 or x < 0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gser(a, x)
    return _gcf(a, x)


def chi2_upper_tail(x, df):
    """Upper-tail probability ``P(chi2_df > x)``."""
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    if df < 1 or int(df) != df:
        raise ValueError("df must be a positive integer")
    if x <= 0:
        return 1.0
    return gammainc_upper(df / 2.0, x / 2.0)


@dataclass(frozen=True, eq=False)
class DiagnosticReport:
    """Periodic residual autocorrelation test result.

    ``r1[m-1]`` is the lag-one residual autocorrelation of period ``m`` and
    ``n_years_eff[m-1]`` the number of residuals observed in that period.
    """

    s: int
    r1: np.ndarray
    n_years_eff: np.ndarray
    n_pairs: np.ndarray
    S: float
    df: int
    p_value: float
    ljung_box: tuple | None = None

    def rows(self):
        return [
            (m, float(r), int(n))
            for m, (r, n) in enumerate(zip(self.r1, self.n_years_eff), start=1)
        ]

    def summary(self):
        lines = [f"{'m':>3} {'r1':>10} {'N_m':>5}"]
        lines += [f"{m:>3} {r:>10.4f} {n:>5}" for m, r, n in self.rows()]
        lines.append(f"S = {self.S:.4f}, df = {self.df}, p-value = {self.p_value:.4g}")
        if self.ljung_box is not None:
            q, dof, p = self.ljung_box
            lines.append(f"Ljung-Box Q = {q:.4f}, df = {dof}, p-value = {p:.4g}")
        return "\n".join(lines)


def residual_grid(residuals, s, last_period=None):
    """Arrange residuals as a year-by-period grid, NaN-padding the first year.

    The last residual is assigned to ``last_period`` (default ``s``), so a
    sequence shortened at the front by differencing keeps its period labels.
    """
    if isinstance(residuals, SeasonalSeries):
        return residuals.values.copy()
    a = np.asarray(residuals, dtype=float).ravel()
    last_period = s if last_period is None else last_period
    pad_end = s - last_period
    pad_start = (-(a.size + pad_end)) % s
    grid = np.concatenate([np.full(pad_start, np.nan), a, np.full(pad_end, np.nan)])
    return grid.reshape(-1, s)


def _pair_sums(flat, s, m, k):
    # sums over years where both a_{r,m} and its lag-k predecessor exist
    idx = np.arange(m - 1, flat.size, s)
    idx = idx[idx - k >= 0]
    x, y = flat[idx], flat[idx - k]
    ok = ~(np.isnan(x) | np.isnan(y))
    x, y = x[ok], y[ok]
    return np.dot(x, y), np.dot(x, x), np.dot(y, y), x.size


def residual_periodic_acf(residuals, s, k=1, last_period=None, return_counts=False):
    """Residual periodic autocorrelations ``r_m(k)`` for ``m = 1..s``.

    ``r_m(k) = sum a[r,m] a[r,m-k] / sqrt(sum a[r,m]^2 * sum a[r,m-k]^2)``
    with all three sums over the years in which both terms exist.  The
    residuals are not re-centred.

    Raises
    ------
    DegenerateVariance
        When a denominator is zero.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    grid = residual_grid(residuals, s, last_period)
    if np.count_nonzero(~np.isnan(grid)) < 2 * s:
        raise TooShort("need at least 2*s residuals")
    flat = grid.ravel()
    r = np.empty(s)
    pairs = np.empty(s, dtype=int)
    for m in range(1, s + 1):
        num, sxx, syy, n = _pair_sums(flat, s, m, k)
        denom = math.sqrt(sxx * syy)
        if denom == 0.0:
            raise DegenerateVariance(m)
        r[m - 1] = num / denom
        pairs[m - 1] = n
    if return_counts:
        return r, pairs
    return r


def s_statistic(residuals, s, last_period=None, ljung_box_lags=None, fitted_params=0):
    """Periodic residual autocorrelation test.

    ``S = sum_m N_m r_m(1)^2`` where ``N_m`` is the number of residuals in
    period ``m`` (the number of years when no residuals were lost).  The
    p-value is the chi-squared upper tail on ``s`` degrees of freedom.
    Optionally a Ljung-Box test with ``ljung_box_lags`` lags is attached.
    """
    grid = residual_grid(residuals, s, last_period)
    r1, pairs = residual_periodic_acf(grid, s, 1, return_counts=True)
    n_eff = np.count_nonzero(~np.isnan(grid), axis=0)
    S = float(np.dot(n_eff, r1 ** 2))
    lb = None
    if ljung_box_lags:
        a = grid.ravel()
        lb = ljung_box(a[~np.isnan(a)], ljung_box_lags, fitted_params)
    return DiagnosticReport(s, r1, n_eff, pairs, S, s, chi2_upper_tail(S, s), lb)


def ljung_box(residuals, max_lag, fitted_params=0):
    """Ljung-Box portmanteau test.

    ``Q = n (n + 2) sum_{k=1}^K r_k^2 / (n - k)`` with ``r_k`` the sample
    autocorrelations of the mean-corrected residuals, referred to
    chi-squared on ``K - fitted_params`` degrees of freedom.

    Returns
    -------
    (statistic, df, p_value)
    """
    a = np.asarray(residuals, dtype=float).ravel()
    n = a.size
    if max_lag <= fitted_params:
        raise InsufficientLags(f"max_lag={max_lag} must exceed fitted_params={fitted_params}")
    if n <= max_lag:
        raise InsufficientLags(f"{n} residuals for max_lag={max_lag}")
    a = a - a.mean()
    c0 = np.dot(a, a)
    if c0 == 0:
        raise DegenerateVariance(0)
    lags = np.arange(1, max_lag + 1)
    r = np.array([np.dot(a[k:], a[:-k]) for k in lags]) / c0
    q = float(n * (n + 2) * np.sum(r ** 2 / (n - lags)))
    df = max_lag - fitted_params
    return q, df, chi2_upper_tail(q, df)
