"""European call pricing from the Linear-model characteristic function.

Calls are priced along a shifted contour ``z = w + i c``::

    C = -(S0 / 2 pi) e^{-D} int e^{-i z D} f(-z) / (z^2 - i z) dz,   D = ln(S0/K) + r tau

which needs ``1 < c < c_plus`` so that the payoff transform and the CF
are both analytic on the line.  The real form integrates
``cos(w D)`` and ``sin(w D)`` against ``W f`` over ``w >= 0``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm

from .charfn import cf_values, pole_ordinates
from .errors import EmptyContourRegion, NoConvergence, OutOfBounds
from .params import ModelParams
from .quadrature import sincos_transform, truncation_point

DEFAULT_LAMBDA = 0.5
IV_BRACKET = (1e-4, 5.0)


@dataclass(frozen=True)
class ContourConfig:
    lam: float
    c: float
    c_minus: float
    c_plus: float
    quad_abs_tol: float = 1e-9  # multiplied by S0
    quad_rel_tol: float = 1e-8
    env_tol: float = 1e-12  # multiplied by S0
    omega_max: float = 1e5
    max_tilt: float = 4.0


@dataclass(frozen=True)
class OptionQuote:
    S0: float
    K: float
    r: float
    tau: float
    price: float
    implied_vol: float

    @property
    def log_moneyness(self) -> float:
        return math.log(self.S0 / self.K)


def contour_offset(p: ModelParams, lam: float = DEFAULT_LAMBDA, **tolerances) -> ContourConfig:
    """Resolve the contour ordinate ``c = lam * alpha / (k m (1 + rho))``.

    With no stochastic volatility (``k m (1 + rho) == 0``) the upper pole
    is at infinity and ``c = 1 + lam`` is used instead.
    """
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    if not -1 < p.rho < 1:
        raise EmptyContourRegion("contour placement needs rho strictly inside (-1, 1)")
    c_minus, c_plus = pole_ordinates(p)
    c = 1.0 + lam if math.isinf(c_plus) else lam * c_plus
    if not (c > 1.0 and c_minus < c < c_plus):
        raise EmptyContourRegion(
            f"c = {c:.6g} outside {{c > 1}} & ({c_minus:.6g}, {c_plus:.6g})"
        )
    return ContourConfig(lam=lam, c=c, c_minus=c_minus, c_plus=c_plus, **tolerances)


def black_scholes(S0, K, r, tau, sigma):
    S0, K, r, tau, sigma = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (S0, K, r, tau, sigma)))
    disc_k = K * np.exp(-r * tau)
    vol = sigma * np.sqrt(tau)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(S0 / K) + r * tau) / vol + 0.5 * vol
        price = S0 * norm.cdf(d1) - disc_k * norm.cdf(d1 - vol)
    price = np.where(vol > 0, price, np.maximum(S0 - disc_k, 0.0))
    price = np.where(np.isinf(vol), S0, price)
    return price[()] if price.ndim == 0 else price


def bs_vega(S0, K, r, tau, sigma):
    vol = sigma * math.sqrt(tau)
    d1 = (math.log(S0 / K) + r * tau) / vol + 0.5 * vol
    return S0 * math.sqrt(tau) * norm.pdf(d1)


def implied_vol(price: float, S0: float, K: float, r: float, tau: float,
                max_iter: int = 200) -> float:
    """Black-Scholes volatility reproducing a call price.

    Newton steps inside a shrinking bracket, with bisection whenever a
    step would leave the bracket.
    """
    lower = max(S0 - K * math.exp(-r * tau), 0.0)
    if not lower < price < S0:
        raise OutOfBounds(f"call price {price!r} outside ({lower!r}, {S0!r})")
    lo, hi = IV_BRACKET
    f_lo = float(black_scholes(S0, K, r, tau, lo)) - price
    f_hi = float(black_scholes(S0, K, r, tau, hi)) - price
    if f_lo > 0 or f_hi < 0:
        raise OutOfBounds(f"implied vol for price {price!r} outside bracket {IV_BRACKET}")
    ptol = 1e-13 * max(S0, 1.0)
    x = 0.5 * (lo + hi) if f_lo < -f_hi * 10 else lo + 0.1
    for _ in range(max_iter):
        fx = float(black_scholes(S0, K, r, tau, x)) - price
        if abs(fx) <= ptol:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        if hi - lo <= 1e-15 * hi:
            return x
        vega = bs_vega(S0, K, r, tau, x)
        step = x - fx / vega if vega > 0 else np.nan
        x = step if lo < step < hi else 0.5 * (lo + hi)
    raise NoConvergence(f"implied vol did not converge in {max_iter} iterations")


def _lewis_integrand(p: ModelParams, tau: float, c: float, X0: float, Z0):
    def func(w):
        z = w + 1j * c
        vals = 2.0 * cf_values(-z, tau, p, X0=X0, Z0=Z0) / (z * z - 1j * z)
        # the w<0 half of the line is the conjugate mirror of w>0
        return vals.real, vals.imag

    def envelope(w):
        z = w + 1j * c
        return np.abs(2.0 * cf_values(-z, tau, p, X0=X0, Z0=Z0) / (z * z - 1j * z))

    return func, envelope


def _effective_offsets(D, cc: ContourConfig):
    # any c in (1, c_plus) is exact; deep in-the-money strikes get a c
    # closer to 1 so that exp(D (c - 1)) stays O(1) and the integral does
    # not cancel below double precision
    c = np.full(D.shape, cc.c)
    big = D * (cc.c - 1.0) > cc.max_tilt
    c[big] = 1.0 + cc.max_tilt / D[big]
    return c


def lewis_call(S0, K, r, tau, p: ModelParams, X0: float = 0.0, Z0: float | None = None,
               cc: ContourConfig | None = None):
    """Call price(s) for strike(s) ``K`` at one maturity.

    Returns a float for scalar ``K`` and an ndarray otherwise.
    """
    if not tau > 0:
        raise ValueError("tau must be > 0")
    p.ensure()
    cc = contour_offset(p) if cc is None else cc
    K_arr = np.atleast_1d(np.asarray(K, dtype=float))
    if np.any(K_arr <= 0):
        raise ValueError("strikes must be > 0")
    D = np.log(S0 / K_arr) + r * tau
    offsets = _effective_offsets(D, cc)
    price = np.empty_like(D)
    for c in np.unique(offsets):
        sel = offsets == c
        pref = S0 / (2.0 * math.pi) * np.exp(D[sel] * (c - 1.0))
        func, envelope = _lewis_integrand(p, tau, c, X0, Z0)
        # the truncation must hold for the largest prefactor in the batch
        omega_cut = truncation_point(
            envelope, cc.env_tol * S0 / float(np.max(pref)), cc.omega_max
        )
        integral, _ = sincos_transform(
            func, D[sel], omega_cut=omega_cut, tol_abs=cc.quad_abs_tol * S0 / pref,
            tol_rel=cc.quad_rel_tol,
        )
        price[sel] = -pref * integral
    return float(price[0]) if np.ndim(K) == 0 else price


def pdf_from_cf(x, tau: float, p: ModelParams, X0: float = 0.0, Z0: float | None = None,
                tol: float = 1e-10, env_tol: float = 1e-14, omega_max: float = 1e5):
    """Transition density of ``X(tau)`` by Fourier inversion of the CF."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    p.ensure()
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))

    def func(w):
        f = cf_values(w, tau, p, X0=X0, Z0=Z0)
        return f.real / math.pi, f.imag / math.pi

    def envelope(w):
        return np.abs(cf_values(w, tau, p, X0=X0, Z0=Z0)) / math.pi

    omega_cut = truncation_point(envelope, env_tol, omega_max, omega_min=0.5)
    dens, _ = sincos_transform(func, x_arr, omega_cut=omega_cut, tol_abs=tol)
    return float(dens[0]) if np.ndim(x) == 0 else dens


def _group_quotes(quotes):
    groups = defaultdict(list)
    for i, (tau, K, r) in enumerate(quotes):
        groups[(float(tau), float(r))].append((i, float(K)))
    return groups


def model_prices(p: ModelParams, quotes, S0: float, lam: float = DEFAULT_LAMBDA, **tolerances):
    """Call prices for ``(tau, K, r)`` triples, batched per maturity."""
    out = np.empty(len(quotes))
    for (tau, r), items in _group_quotes(quotes).items():
        idx = [i for i, _ in items]
        strikes = np.array([K for _, K in items])
        cc = contour_offset(p, lam, **tolerances)
        out[idx] = lewis_call(S0, strikes, r, tau, p, cc=cc)
    return out


def smile_curve(p: ModelParams, quotes, S0: float, lam: float = DEFAULT_LAMBDA,
                **tolerances) -> list[OptionQuote]:
    """Model implied-vol smile at the requested ``(tau, K, r)`` points."""
    prices = model_prices(p, quotes, S0, lam, **tolerances)
    out = []
    for (tau, K, r), price in zip(quotes, prices):
        iv = implied_vol(float(price), S0, float(K), float(r), float(tau))
        out.append(OptionQuote(S0=S0, K=float(K), r=float(r), tau=float(tau),
                               price=float(price), implied_vol=iv))
    return out


BAND_PARAMS = ("alpha", "k", "m", "rho")


def smile_jacobian(p: ModelParams, quotes, S0: float, lam: float = DEFAULT_LAMBDA,
                   names=BAND_PARAMS, **tolerances) -> np.ndarray:
    """Central-difference sensitivities of model implied vols to ``names``."""
    jac = np.empty((len(quotes), len(names)))
    for j, name in enumerate(names):
        value = getattr(p, name)
        step = max(1e-3 * abs(value), 1e-5)
        if name == "rho":
            step = min(step, 0.5 * (1 - abs(value)))
        up = smile_curve(replace(p, **{name: value + step}), quotes, S0, lam, **tolerances)
        dn = smile_curve(replace(p, **{name: value - step}), quotes, S0, lam, **tolerances)
        jac[:, j] = [(u.implied_vol - d.implied_vol) / (2 * step) for u, d in zip(up, dn)]
    return jac


def smile_error_band(p: ModelParams, param_cov, quotes, S0: float, lam: float = DEFAULT_LAMBDA,
                     names=BAND_PARAMS, **tolerances) -> np.ndarray:
    """First-order standard error of each model implied vol.

    ``param_cov`` is the covariance of ``names`` (alpha, k, m, rho by default).
    """
    cov = np.asarray(param_cov, dtype=float)
    if cov.shape != (len(names), len(names)):
        raise ValueError(f"covariance must be {len(names)}x{len(names)}")
    if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise ValueError("covariance must be symmetric")
    if not np.any(cov):
        return np.zeros(len(quotes))
    jac = smile_jacobian(p, quotes, S0, lam, names, **tolerances)
    var = np.einsum("ij,jk,ik->i", jac, cov, jac)
    return np.sqrt(np.clip(var, 0.0, None))
