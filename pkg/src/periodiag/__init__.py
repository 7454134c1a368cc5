"""Periodic autoregression, seasonal ARMA and periodic residual diagnostics."""

from .core import SeasonalSeries, from_flat, log_transform, read_csv, write_csv
from .diagnostics import (
    DiagnosticReport,
    chi2_upper_tail,
    ljung_box,
    residual_periodic_acf,
    s_statistic,
)
from .experiments import (
    ForecastEval,
    MonteCarloSummary,
    backtest,
    combine_forecasts,
    compare_pairwise,
    table1_experiment,
)
from .par import (
    ParModel,
    PeriodicAutoRegression,
    fit_par,
    forecast_par,
    select_orders_minimal,
    select_orders_subset,
    simulate_par,
)
from .periodic_stats import periodic_autocovariance, periodic_mean, periodic_pacf
from .sarima import (
    SarimaFit,
    SarimaSpec,
    SeasonalARIMA,
    css,
    difference,
    fit_sarima,
    forecast_sarima,
    simulate_sarima,
)

__version__ = "0.1.0"
