import math

import numpy as np
import pytest

from linou import ModelParams
from linou.charfn import cf_values, pole_ordinates
from linou.cumulants import (
    CumulantSet, analytic_cumulants, model_smile_stats, small_tau_asymptotics,
    smile_stats_from_cumulants,
)
from linou.errors import NonPositiveVariance
from linou.montecarlo import SimConfig, mc_smile_stats, simulate
from oracles import fd_cumulants, fd_step, random_params, series_cumulants


def test_matches_frozen_series_oracle(golden):
    for case in golden["cumulants"]:
        c = analytic_cumulants(case["tau"], ModelParams(**case["params"]))
        for got, want in zip((c.k1, c.k2, c.k3, c.k4), case["k"]):
            assert got == pytest.approx(want, rel=1e-9, abs=1e-15), case


def test_matches_live_series_oracle_off_unit_driver():
    p = ModelParams(alpha=3.0, k=0.7, m=0.3, rho=0.5, z0=1.3)
    c = analytic_cumulants(2.0, p)
    ref = series_cumulants(2.0, p.alpha, p.k, p.m, p.rho, p.z0)
    assert np.allclose([c.k1, c.k2, c.k3, c.k4], ref, rtol=1e-10)


@pytest.mark.parametrize("tau", [0.08, 0.5, 2.0])
def test_finite_difference_oracle(tau):
    rng = np.random.default_rng(int(tau * 1000))
    for d in random_params(rng, 20):
        p = ModelParams(**d)

        def log_cf(s):
            return np.log(cf_values(s, tau, p))

        fd = fd_cumulants(log_cf, fd_step(log_cf, *pole_ordinates(p)))
        c = analytic_cumulants(tau, p)
        for got, want in zip(fd, (c.k1, c.k2, c.k3, c.k4)):
            assert abs(got / want - 1) < 1e-5, d


def test_deterministic_volatility_limit():
    p = ModelParams(alpha=3.0, k=0.0, m=0.25, rho=0.3)
    for tau in (0.05, 1.0, 4.0):
        c = analytic_cumulants(tau, p)
        assert c.k1 == pytest.approx(-p.m**2 * tau / 2, rel=1e-12)
        assert c.k2 == pytest.approx(p.m**2 * tau, rel=1e-12)
        assert c.k3 == 0.0 and c.k4 == 0.0


def test_small_horizon_variance(lin_params):
    for z0 in (0.8, 1.0, 1.2):
        p = lin_params.with_(z0=z0)
        tau = 1e-5
        assert analytic_cumulants(tau, p).k2 / (p.m**2 * z0**2 * tau) == pytest.approx(1, abs=1e-3)


def test_extended_precision_branch_is_continuous(lin_params):
    a = lin_params.alpha
    lo = analytic_cumulants(0.1 / a * (1 - 1e-9), lin_params)
    hi = analytic_cumulants(0.1 / a * (1 + 1e-9), lin_params)
    for x, y in zip((lo.k2, lo.k3, lo.k4), (hi.k2, hi.k3, hi.k4)):
        assert x == pytest.approx(y, rel=1e-7)


def test_horizon_std_against_market(lin_params):
    s = model_smile_stats(0.5781, lin_params)
    assert abs(s.sigma - 0.235) < 2 * 0.011


def test_smile_stats_from_cumulants():
    s = smile_stats_from_cumulants(CumulantSet(0.0, 0.04, 0.0, 0.0, 1.0))
    assert s.values() == (pytest.approx(0.2), 0.0, 0.0)
    s = smile_stats_from_cumulants(CumulantSet(0.0, 0.0131, -8.68e-4, 2.47e-4, 0.1562))
    assert s.zeta == pytest.approx(-0.578, abs=0.002)
    assert s.kappa == pytest.approx(1.44, abs=0.005)
    assert s.errors() == (0.0, 0.0, 0.0)
    with pytest.raises(NonPositiveVariance):
        smile_stats_from_cumulants(CumulantSet(0.0, 0.0, 0.0, 0.0, 1.0))


def test_small_tau_asymptote_values(lin_params):
    zeta, _ = small_tau_asymptotics(0.01, lin_params)
    assert zeta == pytest.approx(3 * 1.9 * -0.41 * 0.1)
    assert small_tau_asymptotics(0.01, lin_params.with_(rho=0.0))[0] == 0.0


def test_small_tau_convergence(lin_params):
    s = model_smile_stats(1e-3, lin_params)
    zeta, kappa = small_tau_asymptotics(1e-3, lin_params)
    assert s.zeta == pytest.approx(zeta, rel=0.05)
    assert s.kappa == pytest.approx(kappa, rel=0.05)


@pytest.mark.parametrize("rho", [-0.7, -0.2, 0.3, 0.8])
def test_skew_has_sign_of_correlation(lin_params, rho):
    s = model_smile_stats(0.01, lin_params.with_(rho=rho))
    assert math.copysign(1, s.zeta) == math.copysign(1, rho)


def test_agrees_with_simulation(lin_params):
    e = simulate("Linear", lin_params, 0.5, SimConfig(n_paths=100_000, n_steps=1000, seed=5))
    mc = mc_smile_stats(e)
    an = model_smile_stats(0.5, lin_params)
    for v_mc, err, v_an in zip(mc.values(), mc.errors(), an.values()):
        assert abs(v_mc - v_an) < 3 * err
