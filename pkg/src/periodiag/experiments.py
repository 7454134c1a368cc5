"""Monte Carlo size study, hold-out backtesting and forecast combination."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_series
from .diagnostics import s_statistic
from .exceptions import MisalignedEvals, NoConvergence, TooShort
from .par import PeriodicAutoRegression
from .sarima import SarimaSpec, SeasonalARIMA, fit_sarima, simulate_sarima

__all__ = [
    "CRITICAL_5PCT_12DF",
    "ForecastEval",
    "MonteCarloSummary",
    "table1_experiment",
    "backtest",
    "make_model",
    "combine_forecasts",
    "compare_pairwise",
    "default_n_jobs",
]

CRITICAL_5PCT_12DF = 21.0261
MAX_REDRAWS = 20


def default_n_jobs():
    """Worker count from ``PERIODIAG_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("PERIODIAG_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class ForecastEval:
    """Aligned forecasts and actuals with their error summaries."""

    label: str
    forecasts: np.ndarray
    actuals: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.forecasts, dtype=float).ravel()
        y = np.asarray(self.actuals, dtype=float).ravel()
        if f.shape != y.shape:
            raise MisalignedEvals("forecasts and actuals differ in length")
        object.__setattr__(self, "forecasts", f)
        object.__setattr__(self, "actuals", y)

    @property
    def errors(self):
        return self.forecasts - self.actuals

    @property
    def n(self):
        return self.forecasts.size

    @property
    def mse(self):
        return float(np.mean(self.errors ** 2))

    @property
    def rmse(self):
        return float(np.sqrt(self.mse))

    @property
    def mae(self):
        return float(np.mean(np.abs(self.errors)))


@dataclass(frozen=True)
class MonteCarloSummary:
    phi1: float
    n_reps: int
    mean_S: float
    var_S: float
    empirical_level: float
    critical: float
    seed: int
    n_years: int
    s: int
    n_redrawn: int

    def as_row(self):
        return {
            "phi1": self.phi1,
            "n_years": self.n_years,
            "n_reps": self.n_reps,
            "mean_S": self.mean_S,
            "var_S": self.var_S,
            "empirical_level": self.empirical_level,
            "critical": self.critical,
            "n_redrawn": self.n_redrawn,
            "seed": self.seed,
        }


def _replicate_seed(seed, rep, attempt):
    # counter-based, so results do not depend on scheduling order
    return np.random.SeedSequence([seed, rep, attempt])


def _table1_replicate(phi1, n_years, s, seed, rep, include_mean):
    spec_sim = SarimaSpec(p=1, s=s, include_mean=False)
    spec_fit = SarimaSpec(p=1, s=s, include_mean=include_mean)
    for attempt in range(MAX_REDRAWS):
        ss = _replicate_seed(seed, rep, attempt)
        sim_seed, opt_seed = ss.spawn(2)
        z = simulate_sarima(spec_sim, [phi1], n_years, seed=sim_seed)
        try:
            fit = fit_sarima(z, spec_fit, random_state=opt_seed)
        except NoConvergence:
            continue
        return s_statistic(fit.residuals, s).S, attempt
    raise NoConvergence(f"replicate {rep} failed {MAX_REDRAWS} times")


def table1_experiment(phi1, n_years=17, s=12, n_reps=1000, seed=0,
                      critical=CRITICAL_5PCT_12DF, include_mean=True, n_jobs=None):
    """Empirical mean, variance and size of the periodic residual test.

    Each replicate simulates a zero-mean AR(1) of ``n_years * s`` values,
    fits ``(1,0,0)(0,0,0)_s`` by CSS (with a mean unless ``include_mean`` is
    False) and computes the statistic on the residuals.  Replicates whose
    fit does not converge are redrawn with a fresh derived seed.
    """
    if not -1 < phi1 < 1:
        raise ValueError("|phi1| must be < 1")
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    n_jobs = default_n_jobs() if n_jobs is None else n_jobs
    job = delayed(_table1_replicate)
    if n_jobs == 1:
        results = [_table1_replicate(phi1, n_years, s, seed, r, include_mean)
                   for r in range(n_reps)]
    else:
        results = Parallel(n_jobs=n_jobs)(
            job(phi1, n_years, s, seed, r, include_mean) for r in range(n_reps)
        )
    S = np.array([r[0] for r in results])
    redrawn = int(sum(r[1] for r in results))
    return MonteCarloSummary(
        phi1=float(phi1),
        n_reps=n_reps,
        mean_S=float(S.mean()),
        var_S=float(S.var(ddof=1)) if n_reps > 1 else 0.0,
        empirical_level=float(np.mean(S > critical)),
        critical=critical,
        seed=seed,
        n_years=n_years,
        s=s,
        n_redrawn=redrawn,
    )


def make_model(kind, period=12, **kwargs):
    """Estimator for a backtest ``kind``.

    ``kind`` is ``"par_minimal"``, ``"par_subset"``, a :class:`SarimaSpec`,
    or ``"sarima"`` with ``order``/``seasonal_order`` keyword arguments.
    """
    if isinstance(kind, SarimaSpec):
        return SeasonalARIMA((kind.p, kind.d, kind.q), (kind.P, kind.D, kind.Q),
                             kind.s, kind.include_mean, **kwargs)
    kind = kind.replace("-", "_")
    if kind == "par_minimal":
        return PeriodicAutoRegression(period=period, method="minimal", **kwargs)
    if kind == "par_subset":
        return PeriodicAutoRegression(period=period, method="subset", **kwargs)
    if kind == "sarima":
        return SeasonalARIMA(period=period, **kwargs)
    raise ValueError(f"unknown model kind {kind!r}")


def backtest(series, model, holdout_years=3, label=None):
    """Frozen-parameter one-step-ahead forecasts over the last years.

    The model is fitted on the first ``N - holdout_years`` years.  Each
    hold-out forecast conditions on every actual value before its origin,
    but parameters are not re-estimated.

    ``model`` is a kind accepted by :func:`make_model` or any object with
    ``fit(series)`` and ``one_step_predictions(series)``.
    """
    series = check_series(series)
    if holdout_years < 1 or series.n_years <= holdout_years + 1:
        raise TooShort(f"{series.n_years} years cannot hold out {holdout_years}")
    if isinstance(model, (str, SarimaSpec)):
        name = str(model)
        model = make_model(model, series.s)
    else:
        name = type(model).__name__
    train = series.head(series.n_years - holdout_years)
    model.fit(train)
    preds = np.asarray(model.one_step_predictions(series), dtype=float)
    start = len(train)
    return ForecastEval(label or name, preds[start:], series.flat[start:])


def combine_forecasts(evals, method="simple_average", window=None, label=None):
    """Pool several aligned forecasts.

    ``simple_average`` takes the pointwise mean.  ``inverse_mse`` weights
    forecast ``i`` at step ``t`` by ``1 / MSE_i`` over the ``window``
    preceding errors, renormalized; the first ``window`` steps use equal
    weights.
    """
    evals = list(evals)
    if len(evals) < 2:
        raise ValueError("need at least two forecasts to combine")
    actuals = evals[0].actuals
    for e in evals[1:]:
        if e.actuals.shape != actuals.shape or not np.array_equal(e.actuals, actuals):
            raise MisalignedEvals(f"{e.label!r} has different actuals")
    F = np.vstack([e.forecasts for e in evals])
    if method in ("simple_average", "average"):
        combined = F.mean(axis=0)
        name = "average"
    elif method == "inverse_mse":
        if window is None or window < 1:
            raise ValueError("inverse_mse needs window >= 1")
        sq = (F - actuals) ** 2
        combined = np.empty(actuals.size)
        for t in range(actuals.size):
            if t < window:
                w = np.ones(len(evals))
            else:
                mse = sq[:, t - window:t].mean(axis=1)
                if np.any(mse == 0):
                    w = (mse == 0).astype(float)
                else:
                    w = 1.0 / mse
            combined[t] = np.dot(w, F[:, t]) / w.sum()
        name = f"inverse_mse({window})"
    else:
        raise ValueError(f"unknown combination method {method!r}")
    if label is None:
        label = f"{name}[" + ",".join(e.label for e in evals) + "]"
    return ForecastEval(label, combined, actuals)


def compare_pairwise(evals_a, evals_b):
    """Number of datasets on which ``a`` has strictly smaller MSE than ``b``."""
    evals_a, evals_b = list(evals_a), list(evals_b)
    if len(evals_a) != len(evals_b):
        raise ValueError("evaluation lists differ in length")
    return sum(a.mse < b.mse for a, b in zip(evals_a, evals_b))
