"""Closed-form cumulants of the Linear model and the smile statistics built on them.

``k_n = (-i)^n d^n ln f / d phi^n`` at ``phi = 0``.  The expressions below
were checked term by term against high-precision differentiation of the
closed-form CF.  Two printed terms needed fixing to pass that check: the
rho-free brace of k3 carries ``k^2 m^4 / alpha^3`` (not ``m^3``), and
the rho^3 brace of k4 enters with a plus sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

from .charfn import martingale_integral
from .errors import NonPositiveVariance
from .params import ModelParams

# below this alpha*tau the brackets cancel to many digits; evaluate them
# in extended precision instead
_SMALL_ALPHA_TAU = 0.1
_MP_DPS = 40


@dataclass(frozen=True)
class CumulantSet:
    k1: float
    k2: float
    k3: float
    k4: float
    tau: float


@dataclass(frozen=True)
class SmileStats:
    """Horizon standard deviation, skewness and excess kurtosis at one maturity."""

    tau: float
    sigma: float
    zeta: float
    kappa: float
    sigma_err: float = 0.0
    zeta_err: float = 0.0
    kappa_err: float = 0.0

    def values(self) -> tuple[float, float, float]:
        return self.sigma, self.zeta, self.kappa

    def errors(self) -> tuple[float, float, float]:
        return self.sigma_err, self.zeta_err, self.kappa_err


def _k234(tau, a, k, m, rho, Z0, E):
    z = Z0 - 1
    x = a * tau
    e1, e2, e3, e4 = E(-x), E(-2 * x), E(-3 * x), E(-4 * x)
    km_a = k * m / a

    k2 = (m**2 / a) / 4 * (
        -2 * km_a**2 * (e2 - 4 * e1 - 2 * x + 3)
        + k**2 / a * (e2 + 2 * x - 1)
        - 2 * z**2 * (e2 - 1)
        - 8 * z * (e1 - 1)
        + 4 * x
    ) + 2 * k * m**3 / a**2 * rho * (
        z * (e1 + x * e1 - 1) - (e1 + x - 1)
    )

    k3 = (
        3 * k**2 * m**4 / (2 * a**3) * (
            z * (e3 - 2 * e2 + e1 * (3 + 2 * x) - 2)
            + 2 * (e2 - 4 * e1 - 2 * x + 3)
        )
        + 3 * k * m**3 / (2 * a**2) * rho * (
            km_a**2 * (-e2 * (3 + 2 * x) + 4 * e1 * (3 + x) + 4 * x - 9)
            + k**2 / a * (e2 * (1 + x) + x - 1)
            - z**2 * (e2 * (1 + 2 * x) - 1)
            + 2 * z * (e2 - 2 * e1 * (2 + x) + 3)
            + 4 * (e1 + x - 1)
        )
        + 3 * k**2 * m**4 / a**3 * rho**2 * (
            z * (e1 * (2 + 2 * x + x**2) - 2)
            - 2 * (e1 * (2 + x) + x - 2)
        )
    )

    k4 = (
        3 * k**2 * m**4 / a**3 * (
            km_a**2 / 2 * (-e4 + 4 * e3 - 4 * e2 * (3 + x) + 4 * e1 * (7 + 2 * x) + 8 * x - 19)
            + k**2 / (8 * a) * (e4 + 4 * e2 * (1 + 2 * x) + 4 * x - 5)
            - z**2 / 2 * (e4 + 4 * x * e2 - 1)
            + 2 * z * (-e3 + 2 * e2 - e1 * (3 + 2 * x) + 2)
            + 2 * (-e2 + 4 * e1 + 2 * x - 3)
        )
        + 6 * k**3 * m**5 / a**4 * rho * (
            z * (3 * e3 * (1 + x) - 2 * e2 * (3 + 2 * x) + e1 * (9 + 7 * x + 2 * x**2) - 6)
            + (-e3 + 2 * e2 * (5 + 2 * x) - e1 * (35 + 10 * x) - 12 * x + 26)
        )
        + 3 * k**2 * m**4 / a**3 * rho**2 * (
            4 * km_a**2 * (-e2 * (3 + 3 * x + x**2) + e1 * (12 + 6 * x + x**2) + 3 * x - 9)
            + k**2 / a * (e2 * (3 + 4 * x + 2 * x**2) + 2 * x - 3)
            - 2 * z**2 * (e2 * (1 + 2 * x + 2 * x**2) - 1)
            + 4 * z * (2 * e2 * (1 + x) - e1 * (6 + 4 * x + x**2) + 4)
            - 2 * (e2 - 4 * e1 * (3 + x) - 6 * x + 11)
        )
        + 4 * k**3 * m**5 / a**4 * rho**3 * (
            z * (e1 * (6 + 6 * x + 3 * x**2 + x**3) - 6)
            - 3 * (e1 * (6 + 4 * x + x**2) + 2 * x - 6)
        )
    )
    return k2, k3, k4


def analytic_cumulants(
    tau: float, p: ModelParams, X0: float = 0.0, Z0: float | None = None
) -> CumulantSet:
    """First four cumulants of ``X(tau)``."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    z0 = p.z0 if Z0 is None else Z0
    a, k, m, rho = p.alpha, p.k, p.m, p.rho
    if a * tau < _SMALL_ALPHA_TAU:
        with mpmath.workdps(_MP_DPS):
            mp = mpmath.mpf
            k2, k3, k4 = (
                float(v)
                for v in _k234(mp(tau), mp(a), mp(k), mp(m), mp(rho), mp(z0), mpmath.exp)
            )
    else:
        k2, k3, k4 = _k234(tau, a, k, m, rho, z0, math.exp)
    x = a * tau
    k1 = (
        -m**2 / 2 * martingale_integral(tau, p, X0, z0)
        + m**2 / a * (z0 - 1) * math.expm1(-x)
        - m**2 / (2 * a) * x
        + X0
    )
    return CumulantSet(k1=float(k1), k2=float(k2), k3=float(k3), k4=float(k4), tau=float(tau))


def smile_stats_from_cumulants(c: CumulantSet) -> SmileStats:
    if not c.k2 > 0:
        raise NonPositiveVariance(f"k2 = {c.k2!r} at tau = {c.tau}")
    sigma = math.sqrt(c.k2)
    return SmileStats(tau=c.tau, sigma=sigma, zeta=c.k3 / sigma**3, kappa=c.k4 / c.k2**2)


def model_smile_stats(tau: float, p: ModelParams, Z0: float | None = None) -> SmileStats:
    return smile_stats_from_cumulants(analytic_cumulants(tau, p, 0.0, Z0))


def small_tau_asymptotics(tau: float, p: ModelParams, Z0: float | None = None):
    """Leading small-horizon skewness and excess kurtosis.

    zeta ~ 3 k rho sqrt(tau) / Z0,  kappa ~ 4 k^2 (1 + 2 rho^2) tau / Z0^2
    """
    z0 = p.z0 if Z0 is None else Z0
    zeta = 3.0 * p.k * p.rho * math.sqrt(tau) / z0
    kappa = 4.0 * p.k**2 * (1.0 + 2.0 * p.rho**2) * tau / z0**2
    return zeta, kappa
