"""Input coercion shared by the estimators and functional API."""

import numpy as np

from .core import SeasonalSeries, from_flat


def check_series(X, period=None):
    """Coerce ``X`` to a :class:`SeasonalSeries`.

    Accepts a ``SeasonalSeries`` (returned unchanged), a 2-d ``(n_years, s)``
    array, or a 1-d linear-time sequence together with ``period``.
    """
    if isinstance(X, SeasonalSeries):
        if period is not None and X.s != period:
            raise ValueError(f"series has s={X.s} but period={period} was given")
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and (period is None or arr.shape[1] == period):
        return SeasonalSeries(arr)
    if period is None:
        raise ValueError("period is required for 1-d input")
    return from_flat(arr, period)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
