"""Multiplicative seasonal ARMA models fitted by conditional sum of squares.

The model for the differenced series ``w_t = (1-B)^d (1-B^s)^D z_t`` is

    phi(B) Phi(B^s) (w_t - mean) = theta(B) Theta(B^s) a_t

with Box-Jenkins sign conventions, ``phi(B) = 1 - phi_1 B - ...`` and
``theta(B) = 1 - theta_1 B - ...`` (likewise for the seasonal factors).

Parameter vectors are laid out as ``[phi, theta, Phi, Theta, mean]``; the
mean is present only when ``include_mean`` is set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_series
from .core import SeasonalSeries, from_flat
from .exceptions import NoConvergence, TooShort, Unstable

__all__ = [
    "SarimaSpec",
    "SarimaFit",
    "difference",
    "integrate",
    "expand_polynomials",
    "css",
    "css_residuals",
    "fit_sarima",
    "forecast_sarima",
    "one_step_sarima",
    "simulate_sarima",
    "SeasonalARIMA",
]

MAX_ORDER = 5
ROOT_TOL = 1e-6


@dataclass(frozen=True)
class SarimaSpec:
    """Orders ``(p, d, q)(P, D, Q)_s``.

    ``include_mean=None`` resolves to True for undifferenced models and
    False otherwise.
    """

    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    s: int = 12
    include_mean: bool | None = None

    def __post_init__(self):
        for name in ("p", "d", "q", "P", "D", "Q"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v <= MAX_ORDER:
                raise ValueError(f"order {name}={v!r} must be an integer in 0..{MAX_ORDER}")
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if self.include_mean is None:
            object.__setattr__(self, "include_mean", self.d + self.D == 0)

    @classmethod
    def from_orders(cls, order, seasonal_order=(0, 0, 0), s=12, include_mean=None):
        p, d, q = order
        P, D, Q = seasonal_order
        return cls(p, d, q, P, D, Q, s, include_mean)

    @property
    def n_coef(self):
        return self.p + self.q + self.P + self.Q

    @property
    def n_params(self):
        return self.n_coef + int(self.include_mean)

    @property
    def n_lost(self):
        """Observations consumed by differencing."""
        return self.d + self.s * self.D

    @property
    def ar_depth(self):
        return self.p + self.s * self.P

    @cached_property
    def _bounds(self):
        i = [0, self.p, self.p + self.q, self.p + self.q + self.P, self.n_coef]
        return tuple(slice(i[k], i[k + 1]) for k in range(4))

    def split(self, params):
        """Return ``(phi, theta, Phi, Theta, mean)`` from a parameter vector."""
        params = np.asarray(params, dtype=float)
        if params.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {params.size}")
        a, b, c, d = self._bounds
        mean = params[-1] if self.include_mean else 0.0
        return params[a], params[b], params[c], params[d], mean

    def __str__(self):
        return f"({self.p},{self.d},{self.q})({self.P},{self.D},{self.Q})_{self.s}"


@dataclass(eq=False)
class SarimaFit:
    """Result of :func:`fit_sarima`.

    ``residuals`` covers the whole differenced series (length
    ``N*s - d - s*D``), computed with zero pre-sample values; ``css`` sums
    the squared residuals from ``t = p + s*P`` on, and ``sigma2`` is ``css``
    divided by the residual length.
    """

    spec: SarimaSpec
    phi: np.ndarray
    theta: np.ndarray
    Phi: np.ndarray
    Theta: np.ndarray
    mean: float
    sigma2: float
    residuals: np.ndarray = field(repr=False)
    css: float
    converged: bool
    iterations: int
    n_starts: int = 1

    @property
    def params(self):
        parts = [self.phi, self.theta, self.Phi, self.Theta]
        if self.spec.include_mean:
            parts.append([self.mean])
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    def to_dict(self, include_residuals=False):
        sp = self.spec
        out = {
            "order": [sp.p, sp.d, sp.q],
            "seasonal_order": [sp.P, sp.D, sp.Q],
            "s": sp.s,
            "include_mean": sp.include_mean,
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "Phi": self.Phi.tolist(),
            "Theta": self.Theta.tolist(),
            "mean": self.mean,
            "sigma2": self.sigma2,
            "css": self.css,
            "converged": self.converged,
            "iterations": self.iterations,
        }
        if include_residuals:
            out["residuals"] = self.residuals.tolist()
        return out

    def to_json(self, include_residuals=False):
        return json.dumps(self.to_dict(include_residuals), indent=2)

    @classmethod
    def fixed(cls, spec, params, series):
        """Wrap given parameters as a fit, with residuals computed on ``series``."""
        w = difference(series, spec.d, spec.D, spec.s)
        return _make_fit(np.asarray(params, dtype=float), w, spec, True, 0, 0)

    @classmethod
    def from_dict(cls, d):
        spec = SarimaSpec.from_orders(d["order"], d["seasonal_order"], d["s"], d["include_mean"])
        return cls(
            spec,
            np.asarray(d["phi"], float), np.asarray(d["theta"], float),
            np.asarray(d["Phi"], float), np.asarray(d["Theta"], float),
            float(d["mean"]), float(d["sigma2"]),
            np.asarray(d.get("residuals", []), float),
            float(d["css"]), bool(d["converged"]), int(d["iterations"]),
        )


def _flat(series, s=None):
    if isinstance(series, SeasonalSeries):
        return series.flat
    return np.asarray(series, dtype=float).ravel()


def _diff_poly(d, D, s):
    poly = np.array([1.0])
    for _ in range(d):
        poly = np.convolve(poly, [1.0, -1.0])
    seasonal = np.zeros(s + 1)
    seasonal[0], seasonal[s] = 1.0, -1.0
    for _ in range(D):
        poly = np.convolve(poly, seasonal)
    return poly


def difference(series, d=0, D=0, s=12):
    """Apply ``(1-B)^d (1-B^s)^D`` to a series in linear-time order.

    Returns an array of length ``len(series) - d - s*D``.
    """
    x = _flat(series)
    lost = d + s * D
    if x.size <= lost:
        raise TooShort(f"{x.size} observations cannot absorb d={d}, D={D}, s={s}")
    for _ in range(d):
        x = np.diff(x)
    for _ in range(D):
        x = x[s:] - x[:-s]
    return x


def integrate(w, history, d=0, D=0, s=12):
    """Undo differencing: rebuild ``z`` after ``history`` from differences ``w``.

    ``history`` must hold at least ``d + s*D`` undifferenced observations.
    """
    poly = _diff_poly(d, D, s)
    lost = poly.size - 1
    hist = np.asarray(history, dtype=float)
    if hist.size < lost:
        raise TooShort(f"need {lost} past observations to integrate")
    z = list(hist[hist.size - lost:]) if lost else []
    out = np.empty(len(w))
    for i, wi in enumerate(w):
        val = wi - sum(poly[k] * z[-k] for k in range(1, lost + 1))
        z.append(val)
        out[i] = val
    return out


def _factor(coefs, step):
    # lag polynomial 1 - c_1 B^step - ... - c_k B^{k*step}
    poly = np.zeros(len(coefs) * step + 1)
    poly[0] = 1.0
    poly[step::step] = -np.asarray(coefs, dtype=float)
    return poly


def expand_polynomials(params, spec):
    """Full AR and MA lag polynomials ``phi(B)Phi(B^s)`` and ``theta(B)Theta(B^s)``.

    Both are returned as coefficient arrays starting with 1 at lag 0.
    """
    phi, theta, Phi, Theta, _ = spec.split(params)
    return _product(phi, Phi, spec.s), _product(theta, Theta, spec.s)


def _product(coefs, seasonal, s):
    if not seasonal.size:
        return _factor(coefs, 1)
    if not coefs.size:
        return _factor(seasonal, s)
    return np.convolve(_factor(coefs, 1), _factor(seasonal, s))


def _roots_ok(coefs):
    # all roots of 1 - c_1 z - ... - c_k z^k outside the unit circle
    c = np.asarray(coefs, dtype=float)
    if c.size == 0:
        return True
    if c.size == 1:
        return abs(c[0]) < 1.0 - ROOT_TOL
    companion = np.zeros((c.size, c.size))
    companion[0] = c
    companion[1:, :-1] = np.eye(c.size - 1)
    return np.max(np.abs(np.linalg.eigvals(companion))) < 1.0 - ROOT_TOL


def admissible(params, spec):
    """True when every AR factor is stationary and every MA factor invertible."""
    return all(_roots_ok(c) for c in spec.split(params)[:4])


def css_residuals(params, diffed, spec):
    """Innovations ``a_t`` from the recursion with zero pre-sample values."""
    ar, ma = expand_polynomials(params, spec)
    mean = spec.split(params)[4]
    w = np.asarray(diffed, dtype=float) - mean
    if ma.size == 1:
        return np.convolve(w, ar)[: w.size]
    return lfilter(ar, ma, w)


def css(params, diffed, spec):
    """Conditional sum of squares of the innovations.

    Terms before the full AR window (``t <= p + s*P``) are excluded.  Any
    non-finite intermediate yields ``inf`` so optimizers can treat it as a
    rejected point.
    """
    with np.errstate(all="ignore"):
        a = css_residuals(params, diffed, spec)
        value = float(np.dot(a[spec.ar_depth:], a[spec.ar_depth:]))
    return value if np.isfinite(value) else np.inf


def _objective(params, diffed, spec):
    if not admissible(params, spec):
        return np.inf
    return css(params, diffed, spec)


def fit_sarima(series, spec, n_starts=5, max_iter=2000, random_state=0, xtol=1e-8):
    """Fit a seasonal ARMA model by minimizing the conditional sum of squares.

    Nelder-Mead is run from the origin (mean at the sample mean of the
    differenced data) and from ``n_starts - 1`` jittered copies of it; the
    best converged run is kept.  Non-stationary or non-invertible points
    score ``inf``.

    Raises
    ------
    TooShort
        If fewer than ``10 * (n_params + 1)`` differenced observations remain.
    NoConvergence
        If no start converges within ``max_iter`` iterations.
    """
    x = _flat(series)
    w = difference(x, spec.d, spec.D, spec.s)
    if w.size < 10 * (spec.n_params + 1):
        raise TooShort(
            f"{w.size} differenced observations for {spec.n_params} parameters"
        )
    scale = float(np.std(w)) or 1.0
    if spec.n_coef == 0:
        params = np.array([w.mean()]) if spec.include_mean else np.empty(0)
        return _make_fit(params, w, spec, True, 0, 1)

    rng = np.random.default_rng(random_state)
    origin = np.zeros(spec.n_params)
    step = np.full(spec.n_params, 0.1)
    if spec.include_mean:
        origin[-1] = w.mean()
        step[-1] = 0.1 * scale
    f_scale = max(css(origin, w, spec), np.finfo(float).tiny)

    best, total_iter = None, 0
    for k in range(n_starts):
        x0 = origin.copy()
        if k:
            x0 += rng.normal(0.0, 1.0, spec.n_params) * step
            x0[: spec.n_coef] = np.clip(x0[: spec.n_coef], -0.5, 0.5)
        if not np.isfinite(_objective(x0, w, spec)):
            x0 = origin.copy()
        simplex = np.vstack([x0] + [x0 + np.eye(spec.n_params)[i] * step[i]
                                    for i in range(spec.n_params)])
        for i in range(1, simplex.shape[0]):
            if not np.isfinite(_objective(simplex[i], w, spec)):
                simplex[i] = x0 - (simplex[i] - x0)
        res = minimize(
            _objective, x0, args=(w, spec), method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": xtol,
                "fatol": 1e-12 * f_scale,
                "maxiter": max_iter,
                "maxfev": 4 * max_iter,
            },
        )
        total_iter += res.nit
        if res.success and np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise NoConvergence(f"{spec}: no start converged within {max_iter} iterations")
    return _make_fit(best.x, w, spec, True, total_iter, n_starts)


def _make_fit(params, w, spec, converged, iterations, n_starts):
    phi, theta, Phi, Theta, mean = spec.split(params)
    a = css_residuals(params, w, spec)
    tail = a[spec.ar_depth:]
    value = float(np.dot(tail, tail))
    return SarimaFit(
        spec, phi.copy(), theta.copy(), Phi.copy(), Theta.copy(), float(mean),
        value / a.size, a, value, converged, int(iterations), n_starts,
    )


def one_step_sarima(fit, series):
    """In-sample one-step-ahead predictions with the fitted parameters frozen.

    The one-step forecast error of the conditional recursion is the
    innovation, so predictions are ``z_t - a_t``.  The first ``d + s*D``
    entries are NaN.
    """
    x = _flat(series)
    spec = fit.spec
    w = difference(x, spec.d, spec.D, spec.s)
    a = css_residuals(fit.params, w, spec)
    out = np.full(x.size, np.nan)
    out[spec.n_lost:] = x[spec.n_lost:] - a
    return out


def forecast_sarima(fit, series, horizon=1):
    """Minimum mean-square-error forecasts past the end of ``series``.

    Future innovations are set to zero; forecasts of the differenced series
    are cumulated back to the original scale.
    """
    x = _flat(series)
    spec = fit.spec
    w = difference(x, spec.d, spec.D, spec.s)
    params = fit.params
    ar, ma = expand_polynomials(params, spec)
    mean = fit.mean if spec.include_mean else 0.0
    a = list(css_residuals(params, w, spec))
    dev = list(w - mean)
    w_next = np.empty(horizon)
    for h in range(horizon):
        t = len(dev)
        pred = -sum(ar[i] * dev[t - i] for i in range(1, ar.size) if t - i >= 0)
        pred += sum(ma[j] * a[t - j] for j in range(1, ma.size) if t - j >= 0)
        dev.append(pred)
        a.append(0.0)
        w_next[h] = pred + mean
    return integrate(w_next, x, spec.d, spec.D, spec.s)


def simulate_sarima(spec, params, n_years, seed=None, burn_in=50, sigma2=1.0,
                    label="simulated"):
    """Simulate ``n_years`` complete years from a seasonal ARMA model.

    The differenced process is generated from Gaussian innovations with
    zero initial conditions and then cumulated when ``d`` or ``D`` is
    positive; the first ``burn_in`` years are discarded.
    """
    if not admissible(params, spec):
        raise Unstable(f"{spec}: parameters are not stationary/invertible")
    rng = np.random.default_rng(seed)
    total = (n_years + burn_in) * spec.s
    a = rng.standard_normal(total) * np.sqrt(sigma2)
    ar, ma = expand_polynomials(params, spec)
    mean = spec.split(params)[4]
    w = lfilter(ma, ar, a) + mean
    if spec.n_lost:
        w = lfilter([1.0], _diff_poly(spec.d, spec.D, spec.s), w)
    z = w[burn_in * spec.s:]
    if not np.all(np.abs(z) < 1e12):
        raise Unstable(f"{spec}: simulated path diverged")
    return from_flat(z, spec.s, label=label)


class SeasonalARIMA(BaseEstimator):
    """Seasonal ARMA ``(p,d,q)(P,D,Q)_s`` estimator fitted by CSS.

    Parameters
    ----------
    order : tuple of int, default=(1, 0, 0)
    seasonal_order : tuple of int, default=(0, 0, 0)
    period : int, default=12
    include_mean : bool, optional
        Defaults to True only for undifferenced models.
    n_starts : int, default=5
    max_iter : int, default=2000
    random_state : int, default=0
        Seeds the jittered optimizer starts.

    Attributes
    ----------
    fit_ : SarimaFit
    coef_ : ndarray
        Parameter vector ``[phi, theta, Phi, Theta, mean]``.
    residuals_ : ndarray
    sigma2_ : float
    """

    def __init__(self, order=(1, 0, 0), seasonal_order=(0, 0, 0), period=12,
                 include_mean=None, n_starts=5, max_iter=2000, random_state=0):
        self.order = order
        self.seasonal_order = seasonal_order
        self.period = period
        self.include_mean = include_mean
        self.n_starts = n_starts
        self.max_iter = max_iter
        self.random_state = random_state

    def _spec(self):
        return SarimaSpec.from_orders(self.order, self.seasonal_order, self.period,
                                      self.include_mean)

    def fit(self, X, y=None):
        series = check_series(X, self.period)
        self.fit_ = fit_sarima(series, self._spec(), self.n_starts, self.max_iter,
                               self.random_state)
        self.coef_ = self.fit_.params
        self.residuals_ = self.fit_.residuals
        self.sigma2_ = self.fit_.sigma2
        self.series_ = series
        return self

    def predict(self, X=None, horizon=1):
        check_is_fitted(self, "fit_")
        series = self.series_ if X is None else check_series(X, self.period)
        return forecast_sarima(self.fit_, series, horizon)

    def one_step_predictions(self, X):
        check_is_fitted(self, "fit_")
        return one_step_sarima(self.fit_, check_series(X, self.period))
