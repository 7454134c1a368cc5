"""Periodic autoregression: fitting, order selection, simulation, forecasting.

The model for period ``m`` is

    z_t - mu_m = sum_j phi[m, j] * (z_{t-j} - mu_{m-j}) + a_t,
    a_t ~ N(0, sigma2[m]),

with lags resolved through linear time.  Coefficients are estimated by
per-period conditional least squares on the period-mean-corrected data.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_series
from .core import SeasonalSeries
from .exceptions import SingularFit, TooShort, Unstable
from .periodic_stats import deviations, lagged_design, periodic_pacf

__all__ = [
    "ParModel",
    "fit_par",
    "residuals_par",
    "select_orders_minimal",
    "select_orders_subset",
    "simulate_par",
    "forecast_par",
    "one_step_par",
    "PeriodicAutoRegression",
]


@dataclass(eq=False)
class ParModel:
    """Fitted (or user-specified) periodic autoregression.

    ``phi[m-1]`` has length ``orders[m-1]``; entry ``j-1`` is the coefficient
    of lag ``j``.  ``mask[m-1][j-1]`` is False for lags constrained to zero.
    """

    s: int
    orders: np.ndarray
    phi: list
    mu: np.ndarray
    sigma2: np.ndarray
    mask: list | None = None
    n_used: np.ndarray | None = None
    selection: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        self.orders = np.asarray(self.orders, dtype=int)
        self.mu = np.asarray(self.mu, dtype=float)
        self.sigma2 = np.asarray(self.sigma2, dtype=float)
        self.phi = [np.asarray(p, dtype=float).reshape(-1) for p in self.phi]
        if not (len(self.orders) == len(self.phi) == len(self.mu) == len(self.sigma2) == self.s):
            raise ValueError("orders, phi, mu and sigma2 must all have length s")
        for m, (p, ph) in enumerate(zip(self.orders, self.phi), start=1):
            if p < 0 or ph.size != p:
                raise ValueError(f"period {m}: phi has {ph.size} entries for order {p}")
        if np.any(self.sigma2 < 0):
            raise ValueError("innovation variances must be non-negative")
        if self.mask is not None:
            self.mask = [np.asarray(k, dtype=bool).reshape(-1) for k in self.mask]
            for ph, k in zip(self.phi, self.mask):
                if k.size != ph.size:
                    raise ValueError("mask rows must match the orders")
                ph[~k] = 0.0

    @property
    def max_order(self):
        return int(self.orders.max()) if self.orders.size else 0

    @property
    def parameter_count(self):
        """Number of free AR coefficients summed over periods."""
        if self.mask is None:
            return int(self.orders.sum())
        return int(sum(k.sum() for k in self.mask))

    def to_dict(self):
        out = {
            "s": self.s,
            "orders": self.orders.tolist(),
            "phi": [p.tolist() for p in self.phi],
            "mu": self.mu.tolist(),
            "sigma2": self.sigma2.tolist(),
            "parameter_count": self.parameter_count,
        }
        if self.mask is not None:
            out["mask"] = [k.tolist() for k in self.mask]
        if self.n_used is not None:
            out["n_used"] = np.asarray(self.n_used).tolist()
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        return cls(
            s=int(d["s"]),
            orders=d["orders"],
            phi=d["phi"],
            mu=d["mu"],
            sigma2=d["sigma2"],
            mask=d.get("mask"),
            n_used=np.asarray(d["n_used"]) if "n_used" in d else None,
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _as_orders(orders, s):
    orders = np.broadcast_to(np.asarray(orders, dtype=int), (s,)).copy()
    if np.any(orders < 0):
        raise ValueError("orders must be non-negative")
    return orders


def _ols(y, X, m):
    if X.shape[1] == 0:
        return np.empty(0), y
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularFit(f"singular design in period {m}")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef, y - X @ coef


def fit_par(series, orders, mask=None):
    """Fit a periodic autoregression by per-period least squares.

    Parameters
    ----------
    series : SeasonalSeries
    orders : int or sequence of int
        AR order for each period (a scalar applies to every period).
    mask : sequence of bool arrays, optional
        ``mask[m-1][j-1]`` False constrains lag ``j`` of period ``m`` to
        zero.  The estimation sample for period ``m`` still requires a full
        window of ``orders[m-1]`` predecessors.

    Returns
    -------
    ParModel
        ``sigma2[m-1]`` is the residual sum of squares divided by the number
        of years used for period ``m``.
    """
    series = check_series(series)
    s, n_years = series.s, series.n_years
    orders = _as_orders(orders, s)
    if mask is not None and len(mask) != s:
        raise ValueError("mask needs one row per period")
    mu = series.values.mean(axis=0)
    dev = deviations(series)
    phi, sigma2, n_used = [], np.empty(s), np.empty(s, dtype=int)
    for m in range(1, s + 1):
        p = orders[m - 1]
        keep = np.ones(p, dtype=bool) if mask is None else np.asarray(mask[m - 1], dtype=bool)
        if keep.size != p:
            raise ValueError(f"mask row {m} has {keep.size} entries for order {p}")
        lags = np.arange(1, p + 1)[keep]
        y, X = lagged_design(dev, s, n_years, m, lags, min_lag=p)
        if y.size < p + 2:
            raise TooShort(f"period {m}: {y.size} usable years for order {p}")
        coef, resid = _ols(y, X, m)
        full = np.zeros(p)
        full[keep] = coef
        phi.append(full)
        sigma2[m - 1] = np.dot(resid, resid) / y.size
        n_used[m - 1] = y.size
    return ParModel(
        s, orders, phi, mu, sigma2,
        mask=None if mask is None else [np.asarray(k, dtype=bool) for k in mask],
        n_used=n_used,
    )


def residuals_par(model, series):
    """Residuals ``a_t`` of ``series`` under ``model`` in linear-time order.

    Entries whose lag window runs off the start of the series are NaN.  The
    model's own means are used, so a model fitted on a prefix can be applied
    to a longer series.
    """
    series = check_series(series, model.s)
    s = model.s
    x = series.flat
    dev = x - np.tile(model.mu, series.n_years)
    out = np.full(x.size, np.nan)
    for m in range(1, s + 1):
        p = model.orders[m - 1]
        y, X = lagged_design(dev, s, series.n_years, m, np.arange(1, p + 1), min_lag=p)
        idx = np.arange(series.n_years) * s + (m - 1)
        idx = idx[idx - p >= 0]
        out[idx] = y - (X @ model.phi[m - 1] if p else 0.0)
    return out


def one_step_par(model, series):
    """In-sample one-step-ahead predictions (NaN where history is short)."""
    series = check_series(series, model.s)
    return series.flat - residuals_par(model, series)


def forecast_par(model, series, horizon=1):
    """Forecast the ``horizon`` values following the end of ``series``.

    Multi-step forecasts substitute earlier forecasts for unknown values,
    which is the conditional expectation under Gaussian innovations.
    """
    series = check_series(series, model.s)
    s = model.s
    if len(series) < model.max_order:
        raise TooShort(f"need {model.max_order} observations, have {len(series)}")
    mu_t = np.tile(model.mu, series.n_years + horizon // s + 2)
    dev = list(series.flat - mu_t[: len(series)])
    out = np.empty(horizon)
    for h in range(horizon):
        t = len(dev)
        m = t % s
        pred = sum(model.phi[m][j] * dev[t - 1 - j] for j in range(model.orders[m]))
        dev.append(pred)
        out[h] = pred + model.mu[m]
    return out


def simulate_par(model, n_years, seed=None, burn_in=50, label="simulated"):
    """Simulate ``n_years`` of a PAR process with Gaussian innovations.

    The recursion starts from the period means and the first ``burn_in``
    years are discarded.

    Raises
    ------
    Unstable
        If the simulated path exceeds 1e12 in absolute value.
    """
    rng = np.random.default_rng(seed)
    s = model.s
    total = (n_years + burn_in) * s
    sd = np.sqrt(model.sigma2)
    noise = rng.standard_normal(total).reshape(-1, s) * sd
    noise = noise.reshape(-1)
    phi = [list(p) for p in model.phi]
    depth = model.max_order
    dev = [0.0] * depth + [0.0] * total
    for t in range(total):
        m = t % s
        acc = noise[t]
        row = phi[m]
        base = t + depth
        for j, c in enumerate(row, start=1):
            acc += c * dev[base - j]
        if not -1e12 < acc < 1e12:
            raise Unstable(f"simulation diverged at t={t + 1}")
        dev[base] = acc
    z = np.asarray(dev[depth + burn_in * s:]).reshape(n_years, s) + model.mu
    return SeasonalSeries(z, label)


def select_orders_minimal(series, p_max, alpha=0.05, method="ols"):
    """Smallest adequate orders read off the periodic PACF.

    For each period the order is the largest ``k <= p_max`` whose partial
    autocorrelation lies outside the ``alpha``-level white-noise band, or 0
    when none does.  The result is meant for :func:`fit_par` followed by a
    residual adequacy check.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    pacf = periodic_pacf(series, p_max, method=method, alpha=alpha)
    sig = pacf.significant()
    orders = np.zeros(pacf.s, dtype=int)
    for m in range(pacf.s):
        hits = np.flatnonzero(sig[m])
        if hits.size:
            orders[m] = hits[-1] + 1
    return orders


def _criterion(rss, n, k, criterion):
    sigma2 = max(rss / n, np.finfo(float).tiny)
    if criterion == "aic":
        return n * np.log(sigma2) + 2 * k
    return n * np.log(sigma2) + k * np.log(n)


def select_orders_subset(series, p_max, criterion="aic"):
    """Best subset periodic autoregression by exhaustive search.

    Every one of the ``2**p_max`` lag subsets is fitted for each period on a
    common sample (years with ``p_max`` predecessors) and scored with

        AIC = n_m log(sigma2) + 2 k_m,    BIC = n_m log(sigma2) + k_m log(n_m).

    Ties go to fewer coefficients, then to the lexicographically smaller
    mask.  The per-period scores are kept in ``model.selection``.
    """
    criterion = criterion.lower()
    if criterion not in ("aic", "bic"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if not 1 <= p_max <= 14:
        raise ValueError("p_max must lie in 1..14")
    series = check_series(series)
    s, n_years = series.s, series.n_years
    dev = deviations(series)
    best_masks, scores = [], {}
    for m in range(1, s + 1):
        y, Xfull = lagged_design(dev, s, n_years, m, np.arange(1, p_max + 1))
        n = y.size
        if n < p_max + 2:
            raise TooShort(f"period {m}: {n} usable years for order {p_max}")
        table = {}
        best = None
        for mask in itertools.product((False, True), repeat=p_max):
            keep = np.array(mask)
            k = int(keep.sum())
            _, resid = _ols(y, Xfull[:, keep], m)
            score = _criterion(np.dot(resid, resid), n, k, criterion)
            table[mask] = score
            key = (score, k, mask)
            if best is None or key < best:
                best = key
        scores[m] = table
        best_masks.append(np.array(best[2]))
    model = fit_par(series, p_max, mask=best_masks)
    model.selection = {"criterion": criterion, "scores": scores}
    return model


class PeriodicAutoRegression(BaseEstimator):
    """Periodic autoregression with sklearn-style ``fit``/``predict``.

    Parameters
    ----------
    period : int, default=12
        Periods per year.
    orders : int or sequence of int, optional
        Fixed AR orders.  When given, no selection is performed.
    method : {"minimal", "subset"}, default="minimal"
        Order selection when ``orders`` is None: ``minimal`` reads orders off
        the periodic PACF, ``subset`` runs the exhaustive AIC/BIC search.
    p_max : int, default=3
        Largest lag considered by either selection method.
    alpha : float, default=0.05
        PACF band level for ``minimal``.
    criterion : {"aic", "bic"}, default="bic"
        Score for ``subset``.

    Attributes
    ----------
    model_ : ParModel
    orders_ : ndarray of shape (period,)
    coef_ : list of ndarray
    mu_, sigma2_ : ndarray of shape (period,)
    n_params_ : int
    """

    def __init__(self, period=12, orders=None, method="minimal", p_max=3,
                 alpha=0.05, criterion="bic"):
        self.period = period
        self.orders = orders
        self.method = method
        self.p_max = p_max
        self.alpha = alpha
        self.criterion = criterion

    def fit(self, X, y=None):
        series = check_series(X, self.period)
        if self.orders is not None:
            model = fit_par(series, self.orders)
        elif self.method == "minimal":
            model = fit_par(series, select_orders_minimal(series, self.p_max, self.alpha))
        elif self.method == "subset":
            model = select_orders_subset(series, self.p_max, self.criterion)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.model_ = model
        self.orders_ = model.orders
        self.coef_ = model.phi
        self.mu_ = model.mu
        self.sigma2_ = model.sigma2
        self.n_params_ = model.parameter_count
        self.series_ = series
        return self

    def predict(self, X=None, horizon=1):
        """Forecast ``horizon`` steps past the end of ``X`` (default: training data)."""
        check_is_fitted(self, "model_")
        series = self.series_ if X is None else check_series(X, self.period)
        return forecast_par(self.model_, series, horizon)

    def one_step_predictions(self, X):
        check_is_fitted(self, "model_")
        return one_step_par(self.model_, check_series(X, self.period))

    def residuals(self, X=None):
        check_is_fitted(self, "model_")
        series = self.series_ if X is None else check_series(X, self.period)
        return residuals_par(self.model_, series)
