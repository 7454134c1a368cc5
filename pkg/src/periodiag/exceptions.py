"""Exception types raised across periodiag."""


class PeriodiagError(Exception):
    """Base class for all periodiag errors."""


class IncompleteYear(PeriodiagError, ValueError):
    """Data does not fill a whole number of seasonal years."""


class BadValue(PeriodiagError, ValueError):
    """A non-finite observation was supplied."""


class NonPositive(PeriodiagError, ValueError):
    """A value outside the domain of the logarithm."""

    def __init__(self, year, period, value):
        self.year = year
        self.period = period
        self.value = value
        super().__init__(
            f"non-positive value {value!r} at year {year}, period {period}"
        )


class ParseError(PeriodiagError, ValueError):
    """A CSV field could not be parsed."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DegenerateVariance(PeriodiagError, ValueError):
    """A period has zero variance, so correlations are undefined."""

    def __init__(self, period):
        self.period = period
        super().__init__(f"zero variance in period {period}")


class SingularFit(PeriodiagError, ValueError):
    """Normal equations of a regression are singular."""


class TooShort(PeriodiagError, ValueError):
    """Not enough observations for the requested computation."""


class Unstable(PeriodiagError, RuntimeError):
    """A simulated recursion diverged."""


class NoConvergence(PeriodiagError, RuntimeError):
    """The optimizer failed to converge from every start."""


class InsufficientLags(PeriodiagError, ValueError):
    """Portmanteau test requested with too few lags."""


class MisalignedEvals(PeriodiagError, ValueError):
    """Forecast evaluations do not share the same actuals."""
