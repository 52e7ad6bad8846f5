import math

import numpy as np
import pytest

from linou import ModelParams
from linou.charfn import cf_values
from linou.cumulants import analytic_cumulants
from linou.errors import EmptyContourRegion, OutOfBounds
from linou.pricer import (
    black_scholes, contour_offset, implied_vol, lewis_call, model_prices, pdf_from_cf,
    smile_curve, smile_error_band,
)
from oracles import gaussian_pdf

S0 = 5.16


def test_black_scholes_examples():
    assert black_scholes(S0, S0, 0.0, 1.0, 0.0) == 0.0
    assert black_scholes(S0, 4.0, 0.03, 1.0, np.inf) == pytest.approx(S0)
    assert black_scholes(100, 100, 0.0, 1.0, 0.2) == pytest.approx(7.965567455405804, rel=1e-12)


def test_implied_vol_round_trip():
    tau, r, lm, iv = 0.0795, 0.0425, 0.0626, 0.3354
    K = S0 * math.exp(-lm)
    price = black_scholes(S0, K, r, tau, iv)
    assert implied_vol(float(price), S0, K, r, tau) == pytest.approx(iv, abs=1e-12)
    for sigma in (0.05, 0.2, 0.8, 2.0):
        for K in (4.5, 5.16, 6.0):
            c = float(black_scholes(S0, K, 0.01, 0.5, sigma))
            assert implied_vol(c, S0, K, 0.01, 0.5) == pytest.approx(sigma, rel=1e-9)


def test_implied_vol_rejects_arbitrage():
    K, r, tau = 4.0, 0.04, 1.0
    with pytest.raises(OutOfBounds):
        implied_vol(S0 - K * math.exp(-r * tau), S0, K, r, tau)
    with pytest.raises(OutOfBounds):
        implied_vol(S0, S0, K, r, tau)


def test_contour_offset(lin_params):
    cc = contour_offset(lin_params, 0.5)
    assert cc.c == pytest.approx(9.46, abs=0.01)
    assert contour_offset(lin_params.with_(k=0.0), 0.5).c == 1.5
    with pytest.raises(EmptyContourRegion):
        contour_offset(ModelParams(alpha=0.1, k=1.0, m=0.3, rho=0.99), 0.5)
    with pytest.raises(ValueError):
        contour_offset(lin_params, 0.0)


def test_black_scholes_limit():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = rng.uniform(0.05, 0.6)
        tau = rng.uniform(0.05, 3.0)
        K = S0 * math.exp(rng.uniform(-0.5, 0.5))
        r = rng.uniform(0.0, 0.06)
        p = ModelParams(alpha=rng.uniform(1, 10), k=0.0, m=m, rho=0.0)
        got = lewis_call(S0, K, r, tau, p)
        assert got == pytest.approx(float(black_scholes(S0, K, r, tau, m)), abs=1e-8)


@pytest.mark.parametrize("tau", [0.08, 0.83])
def test_contour_position_does_not_matter(lin_params, tau):
    K = S0 * np.exp(-np.linspace(-0.4, 0.4, 9))
    ref = lewis_call(S0, K, 0.04, tau, lin_params, cc=contour_offset(lin_params, 0.5))
    for lam in (0.2, 0.9):
        got = lewis_call(S0, K, 0.04, tau, lin_params, cc=contour_offset(lin_params, lam))
        assert np.max(np.abs(got - ref)) < 2e-9 * S0


def test_zero_strike_limit(lin_params):
    assert lewis_call(S0, 1e-8, 0.03, 1.0, lin_params) == pytest.approx(S0, abs=1e-6 * S0)


def test_monotone_and_convex_in_strike(lin_params):
    K = np.linspace(2.5, 9.0, 40)
    c = lewis_call(S0, K, 0.04, 0.5, lin_params)
    assert np.all(np.diff(c) < 0)
    assert np.all(np.diff(c, 2) > -1e-9)


def test_model_prices_batch_matches_single(lin_params):
    quotes = [(0.08, 5.0, 0.04), (0.5, 5.5, 0.045), (0.08, 5.3, 0.04)]
    batch = model_prices(lin_params, quotes, S0)
    for (tau, K, r), v in zip(quotes, batch):
        assert v == pytest.approx(lewis_call(S0, K, r, tau, lin_params), abs=1e-12)


def test_pdf_gaussian_limit():
    p = ModelParams(alpha=4.0, k=0.0, m=0.3, rho=0.0)
    x = np.linspace(-1, 1, 21)
    tau = 0.7
    want = gaussian_pdf(x, -0.5 * 0.09 * tau, 0.09 * tau)
    assert np.allclose(pdf_from_cf(x, tau, p), want, atol=1e-8)


def test_pdf_normalised_and_matches_moments(lin_params):
    x = np.linspace(-2, 2, 801)
    dens = pdf_from_cf(x, 1.0, lin_params)
    dx = x[1] - x[0]
    assert np.sum(dens) * dx == pytest.approx(1.0, abs=1e-4)
    c = analytic_cumulants(1.0, lin_params)
    assert np.sum(x * dens) * dx == pytest.approx(c.k1, abs=1e-4)


def test_pdf_skew_without_correlation():
    # the variance drift keeps a small skew even when rho = 0
    p = ModelParams(alpha=5.0, k=1.5, m=0.25, rho=0.0)
    c = analytic_cumulants(1.0, p)
    x = np.linspace(-3, 3, 6001)
    dens = pdf_from_cf(x, 1.0, p)
    dx = x[1] - x[0]
    mu = np.sum(x * dens) * dx
    m3 = np.sum((x - mu) ** 3 * dens) * dx
    assert c.k3 < 0
    assert m3 == pytest.approx(c.k3, rel=1e-4)


def test_pdf_round_trip_through_cf(lin_params):
    x = np.linspace(-3, 3, 6001)
    dens = pdf_from_cf(x, 0.5, lin_params)
    dx = x[1] - x[0]
    phi = np.linspace(-5, 5, 11)
    back = np.array([np.sum(np.exp(1j * f * x) * dens) * dx for f in phi])
    assert np.max(np.abs(back - cf_values(phi, 0.5, lin_params))) < 1e-4


def test_flat_smile_without_vol_of_vol():
    p = ModelParams(alpha=5.0, k=0.0, m=0.3, rho=0.0)
    quotes = [(0.5, K, 0.04) for K in (4.0, 5.16, 6.5)]
    ivs = [q.implied_vol for q in smile_curve(p, quotes, S0)]
    assert np.allclose(ivs, 0.3, atol=1e-7)


def test_negative_correlation_gives_downward_skew(lin_params):
    quotes = [(0.5, K, 0.04) for K in (4.0, 5.16, 6.5)]
    ivs = [q.implied_vol for q in smile_curve(lin_params, quotes, S0)]
    assert ivs[0] > ivs[1] > ivs[2]


def test_error_band(lin_params):
    quotes = [(0.5, K, 0.04) for K in (4.5, 5.5)]
    assert np.all(smile_error_band(lin_params, np.zeros((4, 4)), quotes, S0) == 0)
    cov = np.diag([1.0, 0.1, 1e-4, 5e-3])
    b1 = smile_error_band(lin_params, cov, quotes, S0)
    b4 = smile_error_band(lin_params, 4 * cov, quotes, S0)
    assert np.all(b1 > 0)
    assert np.allclose(b4, 2 * b1, rtol=1e-10)
    with pytest.raises(ValueError):
        smile_error_band(lin_params, np.triu(np.ones((4, 4))), quotes, S0)
