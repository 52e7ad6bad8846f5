"""Two-step calibration: per-maturity smile statistics, then model parameters.

Step 1 fits the Gram-Charlier smile approximation::

    sigma_imp = (sigma_tau / sqrt(tau)) [1 - zeta/3! d1 - kappa/4! (1 - d1^2)]
    d1 = [ln(S0/K) + r tau + sigma_tau^2 / 2] / sigma_tau

to each maturity's quotes by Levenberg-Marquardt.  Step 2 chooses
``(alpha, k, m, rho)`` minimising the chi-square distance between the
model's ``(sigma, zeta, kappa)`` term structure and the step-1 values.
Linear and Stein-Stein use the analytic cumulants.  ExpOU uses a Monte
Carlo ensemble with common random numbers across objective evaluations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares, minimize

from .cumulants import SmileStats, model_smile_stats
from .errors import AllStartsFailed, InsufficientQuotes, LinOUError, NonConvergence
from .montecarlo import SimConfig, mc_smile_stats, simulate_many
from .params import ModelKind, ModelParams

PARAM_NAMES = ("alpha", "k", "m", "rho")
D1_WARN = 1.5
SIGMA_WARN = 0.5
MAX_LM_ITER = 500

# spans alpha in [1, 20], k in [0.2, 4], m in [0.05, 0.8], rho in [-0.9, 0.9]
DEFAULT_SEED_POINTS = (
    (1.0, 0.2, 0.05, -0.9),
    (20.0, 4.0, 0.8, 0.9),
    (5.0, 1.0, 0.25, -0.5),
    (10.0, 2.0, 0.3, -0.3),
    (2.0, 0.5, 0.2, 0.0),
    (15.0, 3.0, 0.4, -0.7),
    (3.0, 1.5, 0.15, 0.5),
    (8.0, 0.8, 0.6, -0.1),
)

DEFAULT_BOUNDS = {
    "alpha": (0.0, math.inf),
    "k": (0.0, math.inf),
    "m": (0.0, math.inf),
    "rho": (-1.0, 1.0),
}


class SmileApproximationWarning(UserWarning):
    """The smile approximation is used outside its region of validity."""


@dataclass(frozen=True)
class MarketQuote:
    tau: float
    r: float
    log_moneyness: float
    implied_vol: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau!r}")
        if not self.implied_vol > 0:
            raise ValueError(f"implied_vol must be > 0, got {self.implied_vol!r}")


@dataclass
class CalibrationResult:
    params: ModelParams
    kind: ModelKind
    param_errors: dict
    covariance: np.ndarray
    objective_value: float
    per_maturity_fit: list
    model_stats: list = field(default_factory=list)
    starts_ok: int = 0
    seed_errors: dict | None = None

    @property
    def beta(self) -> float:
        return self.params.beta


def d1(tau, K, S0, r, sigma_tau):
    """Standardised moneyness with ``sigma_tau`` the horizon (not annual) std dev."""
    if np.any(np.asarray(sigma_tau) <= 0):
        raise ValueError("sigma_tau must be > 0")
    return (np.log(S0 / np.asarray(K, dtype=float)) + r * tau + 0.5 * sigma_tau**2) / sigma_tau


def _d1_from_lm(log_m, r, tau, sigma_tau):
    return (np.asarray(log_m, dtype=float) + r * tau + 0.5 * sigma_tau**2) / sigma_tau


def _backus(d, sigma, zeta, kappa, tau):
    return sigma / math.sqrt(tau) * (1.0 - zeta / 6.0 * d - kappa / 24.0 * (1.0 - d * d))


def backus_iv(d1_value, stats: SmileStats, tau: float, warn: bool = True):
    """Gram-Charlier implied volatility at standardised moneyness ``d1_value``."""
    d = np.asarray(d1_value, dtype=float)
    if warn and (np.any(np.abs(d) > D1_WARN) or stats.sigma > SIGMA_WARN):
        warnings.warn(
            f"smile approximation used at |d1| up to {np.max(np.abs(d)):.3g}, "
            f"sigma_tau = {stats.sigma:.3g}",
            SmileApproximationWarning,
            stacklevel=2,
        )
    iv = _backus(d, stats.sigma, stats.zeta, stats.kappa, tau)
    return float(iv) if iv.ndim == 0 else iv


def fit_smile_stats(quotes, S0: float | None = None) -> SmileStats:
    """Least-squares fit of ``(sigma, zeta, kappa)`` to one maturity's smile.

    Standard errors are ``sqrt(diag(s^2 (J^T J)^{-1}))`` with ``s^2`` the
    residual variance on ``n - 3`` degrees of freedom.  ``S0`` is not
    needed when quotes carry log-moneyness and is accepted for symmetry.
    """
    quotes = list(quotes)
    if len(quotes) < 4:
        raise InsufficientQuotes(f"need >= 4 quotes per maturity, got {len(quotes)}")
    taus = {q.tau for q in quotes}
    rates = {q.r for q in quotes}
    if len(taus) != 1 or len(rates) != 1:
        raise ValueError("quotes must share one maturity and rate")
    tau, r = taus.pop(), rates.pop()
    lm = np.array([q.log_moneyness for q in quotes])
    iv = np.array([q.implied_vol for q in quotes])

    def residuals(x):
        s, z, k = x
        return _backus(_d1_from_lm(lm, r, tau, s), s, z, k, tau) - iv

    x0 = np.array([float(np.mean(iv)) * math.sqrt(tau), 0.0, 0.0])
    sol = least_squares(residuals, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=MAX_LM_ITER * 4)
    if not sol.success or not sol.x[0] > 0:
        raise NonConvergence(f"smile fit at tau={tau} failed: {sol.message}")
    dof = len(iv) - 3
    s2 = float(sol.fun @ sol.fun) / dof
    cov = np.linalg.pinv(sol.jac.T @ sol.jac) * s2
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return SmileStats(tau=tau, sigma=float(sol.x[0]), zeta=float(sol.x[1]), kappa=float(sol.x[2]),
                      sigma_err=float(err[0]), zeta_err=float(err[1]), kappa_err=float(err[2]))


# -- step 2 -------------------------------------------------------------------


def model_term_structure(p: ModelParams, kind, taus, mc: SimConfig | None = None) -> list[SmileStats]:
    """Model ``(sigma, zeta, kappa)`` at each maturity, with MC errors for ExpOU."""
    kind = ModelKind.parse(kind)
    if kind is ModelKind.EXPOU:
        cfg = mc or SimConfig()
        ens = simulate_many(kind, p, taus, cfg)
        by_tau = {e.tau: mc_smile_stats(e) for e in ens}
        return [by_tau[float(t)] for t in taus]
    return [model_smile_stats(float(t), p) for t in taus]


def stat_residuals(p: ModelParams, kind, market, mc: SimConfig | None = None,
                   model: list[SmileStats] | None = None) -> np.ndarray:
    """Chi residuals ``(model - market) / eps`` for every maturity and statistic."""
    market = list(market)
    if model is None:
        model = model_term_structure(p, kind, [s.tau for s in market], mc)
    out = []
    for mk, md in zip(market, model):
        for v_mk, e_mk, v_md, e_md in zip(mk.values(), mk.errors(), md.values(), md.errors()):
            eps = math.sqrt(e_mk**2 + e_md**2)
            if not eps > 0:
                raise ValueError(f"zero combined error at tau={mk.tau}")
            out.append((v_md - v_mk) / eps)
    return np.asarray(out)


def global_objective(p: ModelParams, kind, market, mc_stats: list[SmileStats] | None = None,
                     mc: SimConfig | None = None) -> float:
    """Chi-square distance between model and market term structures.

    ``mc_stats`` supplies precomputed model statistics (with their errors);
    otherwise they are computed from ``kind``.
    """
    r = stat_residuals(p, kind, market, mc, model=mc_stats)
    return float(r @ r)


def _to_natural(u, bounds):
    out = []
    for name, ui in zip(PARAM_NAMES, u):
        lo, hi = bounds[name]
        if math.isinf(hi):
            out.append(lo + math.exp(ui))
        else:
            out.append(lo + (hi - lo) * 0.5 * (math.tanh(ui) + 1.0))
    return out


def _to_internal(x, bounds):
    out = []
    for name, xi in zip(PARAM_NAMES, x):
        lo, hi = bounds[name]
        if math.isinf(hi):
            out.append(math.log(xi - lo))
        else:
            t = 2.0 * (xi - lo) / (hi - lo) - 1.0
            out.append(math.atanh(min(max(t, -1 + 1e-12), 1 - 1e-12)))
    return np.asarray(out)


def _numerical_hessian(f, x, rel=1e-4):
    n = len(x)
    h = np.maximum(rel * np.abs(x), 1e-6)
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def calibrate(market, kind=ModelKind.LINEAR, bounds=None, seed_points=DEFAULT_SEED_POINTS,
              mc: SimConfig | None = None, workers: int = 1, seed_resamples: int = 0,
              base: ModelParams | None = None) -> CalibrationResult:
    """Multistart fit of ``(alpha, k, m, rho)`` to market smile statistics.

    Each start runs Nelder-Mead in transformed coordinates (log for the
    positive parameters, tanh for ``rho``); the best point is polished by
    least squares on the chi residuals.  The covariance is ``2 H^{-1}``
    with ``H`` the finite-difference Hessian of the objective in natural
    coordinates.

    For ExpOU, ``seed_resamples > 0`` re-polishes the optimum under that
    many fresh MC seeds and reports the spread of the parameters as
    ``seed_errors``.
    """
    kind = ModelKind.parse(kind)
    market = sorted(market, key=lambda s: s.tau)
    if len({s.tau for s in market}) < 2:
        raise ValueError("need at least two maturities")
    bounds = {**DEFAULT_BOUNDS, **(bounds or {})}
    base = base or ModelParams(alpha=1.0, k=1.0, m=0.1, rho=0.0)
    mc = mc or (SimConfig() if kind is ModelKind.EXPOU else None)

    def params_of(x):
        return replace(base, **{n: float(v) for n, v in zip(PARAM_NAMES, x)})

    def chi(u, cfg=mc, model_kind=kind):
        try:
            r = stat_residuals(params_of(_to_natural(u, bounds)), model_kind, market, cfg)
        except (LinOUError, ValueError, FloatingPointError, OverflowError):
            return None
        return r if np.all(np.isfinite(r)) else None

    # ExpOU starts are screened on the linearised (analytic) objective; only
    # the best one is refined against the simulated term structure
    screen_kind = ModelKind.LINEAR if kind is ModelKind.EXPOU else kind

    def obj(u, model_kind=screen_kind):
        r = chi(u, model_kind=model_kind)
        return float(r @ r) if r is not None else 1e30

    def start(x0):
        try:
            u0 = _to_internal(x0, bounds)
        except ValueError:
            return None
        res = minimize(obj, u0, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000, "maxfev": 8000})
        return res if res.fun < 1e30 else None

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(start, seed_points))
    else:
        runs = [start(x0) for x0 in seed_points]
    ok = [r for r in runs if r is not None]
    if not ok:
        raise AllStartsFailed(f"all {len(seed_points)} starting points failed")
    best = min(ok, key=lambda r: (r.fun, tuple(r.x)))
    if screen_kind is not kind:
        best = minimize(obj, best.x, args=(kind,), method="Nelder-Mead",
                        options={"xatol": 1e-5, "fatol": 1e-6, "maxfev": 2000})
        if not best.fun < 1e30:
            raise NonConvergence("simulated objective failed from the screened optimum")

    def polish(u0, cfg):
        def fun(u):
            r = chi(u, cfg)
            return r if r is not None else np.full(3 * len(market), 1e15)

        sol = least_squares(fun, u0, method="trf", xtol=1e-12, ftol=1e-12, gtol=1e-12,
                            max_nfev=MAX_LM_ITER)
        return sol

    sol = polish(best.x, mc)
    u_opt = sol.x if 2 * sol.cost <= best.fun else best.x
    x_opt = np.asarray(_to_natural(u_opt, bounds))
    p_opt = params_of(x_opt)
    p_opt.ensure()
    model = model_term_structure(p_opt, kind, [s.tau for s in market], mc)
    value = global_objective(p_opt, kind, market, mc_stats=model)
    if not math.isfinite(value):
        raise NonConvergence("objective not finite at the optimum")

    def nat_obj(x):
        try:
            return global_objective(params_of(x), kind, market, mc=mc)
        except (LinOUError, ValueError):
            return math.inf

    H = _numerical_hessian(nat_obj, x_opt)
    if not np.all(np.isfinite(H)):
        raise NonConvergence("Hessian not finite at the optimum")
    cov = 2.0 * np.linalg.pinv(H)
    cov = 0.5 * (cov + cov.T)
    errs = dict(zip(PARAM_NAMES, np.sqrt(np.clip(np.diag(cov), 0.0, None)).tolist()))
    a, k = p_opt.alpha, p_opt.k
    grad_beta = np.array([-k * k / (2 * a * a), k / a, 0.0, 0.0])
    errs["beta"] = float(math.sqrt(max(grad_beta @ cov @ grad_beta, 0.0)))

    seed_errors = None
    if kind is ModelKind.EXPOU and seed_resamples > 0:
        draws = []
        for j in range(seed_resamples):
            cfg = replace(mc, seed=mc.seed + 1 + j)
            s = polish(u_opt, cfg)
            draws.append(_to_natural(s.x, bounds))
        draws = np.asarray(draws)
        betas = draws[:, 1] ** 2 / (2 * draws[:, 0])
        seed_errors = dict(zip(PARAM_NAMES, draws.std(axis=0, ddof=1).tolist()))
        seed_errors["beta"] = float(betas.std(ddof=1))

    return CalibrationResult(
        params=p_opt, kind=kind, param_errors=errs, covariance=cov, objective_value=value,
        per_maturity_fit=market, model_stats=model, starts_ok=len(ok), seed_errors=seed_errors,
    )
