import sys

import numpy as np
import pytest

from periodiag.par import ParModel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def par1_model(phi, sigma2=None, mu=None):
    """PAR(1) model with one coefficient per period."""
    phi = np.asarray(phi, dtype=float)
    s = phi.size
    return ParModel(
        s,
        [1] * s,
        [[p] for p in phi],
        np.zeros(s) if mu is None else mu,
        np.ones(s) if sigma2 is None else sigma2,
    )


def par1_population(phi, sigma2):
    """Stationary variances and lag-1 correlations of a PAR(1) process.

    Iterates gamma_m(0) = phi_m^2 gamma_{m-1}(0) + sigma2_m to its fixed
    point; then gamma_m(1) = phi_m gamma_{m-1}(0).
    """
    phi = np.asarray(phi, float)
    sigma2 = np.asarray(sigma2, float)
    s = phi.size
    var = np.ones(s)
    for _ in range(5000):
        for m in range(s):
            var[m] = phi[m] ** 2 * var[m - 1] + sigma2[m]
    rho1 = np.array([phi[m] * var[m - 1] / np.sqrt(var[m] * var[m - 1]) for m in range(s)])
    return var, rho1


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
