import math

import mpmath
import numpy as np
import pytest

from linou import ModelParams
from linou.charfn import (
    abc, aux_coefficients, cf, cf_values, log_argument_windings, martingale_integral,
    pole_ordinates, strip_bounds,
)
from linou.errors import ContourSingularity, SingularDenominator, StripViolation
from linou.montecarlo import SimConfig, empirical_cf, simulate
from oracles import random_params, riccati_abc, riccati_log_cf


def test_aux_at_origin(lin_params):
    a = aux_coefficients(0.0, lin_params)
    two_alpha = 2 * lin_params.alpha
    assert a.Phi == 0 and a.b == two_alpha and a.d == two_alpha
    assert a.g == 0 and a.h == 0 and a.n == 0


def test_aux_matches_high_precision_definitions(lin_params):
    p = lin_params
    with mpmath.workdps(40):
        phi = mpmath.mpf(1)
        Phi = p.k * p.m * phi / p.alpha
        b = 2 * p.alpha * (1 - 1j * p.rho * Phi)
        d = mpmath.sqrt(b * b + 4 * p.alpha**2 * Phi**2)
        g = (b - d) / (b + d)
        n = p.alpha * (b - d) / (2 * p.k**2)
        h = 1j * p.alpha * p.m * Phi / p.k
        ref = {"b": b, "d": d, "g": g, "n": n, "h": h, "Phi": Phi}
    a = aux_coefficients(1.0, p)
    for name, value in ref.items():
        assert getattr(a, name) == pytest.approx(complex(value), rel=1e-13, abs=1e-15), name


@pytest.mark.parametrize("phi", [0.3, 2.0, -5.0, 1.0 - 2.0j, 7.0 + 0.5j])
def test_aux_invariants(lin_params, phi):
    a = aux_coefficients(phi, lin_params)
    resid = a.d**2 - (4 * lin_params.alpha**2 * a.Phi**2 + a.b**2)
    assert abs(resid) <= 1e-12 * abs(a.d) ** 2
    assert a.g == pytest.approx((a.b - a.d) / (a.b + a.d), rel=1e-12)
    assert a.d.real >= 0


def test_aux_real_at_minus_i_without_correlation():
    a = aux_coefficients(-1j, ModelParams(alpha=4.0, k=1.0, m=0.3, rho=0.0))
    assert abs(a.b.imag) < 1e-15 and abs(a.d.imag) < 1e-15 and a.d.real > 0


def test_abc_vanishes_at_zero_horizon_and_zero_phi(lin_params):
    assert abc(1.7 - 0.3j, 0.0, lin_params) == (0, 0, 0)
    A, B, C = abc(0.0, 2.0, lin_params)
    assert abs(A) == abs(B) == abs(C) == 0


def test_abc_matches_frozen_riccati_oracle(golden):
    for case in golden["abc"]:
        p = ModelParams(**case["params"])
        phi = complex(*case["phi"])
        got = abc(phi, case["tau"], p)
        for value, key in zip(got, "ABC"):
            ref = complex(*case[key])
            assert abs(value - ref) <= 1e-10 * max(1.0, abs(ref)), (phi, key)


def test_abc_matches_live_riccati_oracle(lin_params):
    p = lin_params
    ref = riccati_abc(0.5, 1.0, p.alpha, p.k, p.m, p.rho)
    for got, want in zip(abc(0.5, 1.0, p), ref):
        assert abs(got - want) < 1e-11


def test_abc_vectorised(lin_params):
    phis = np.array([0.1, 1.0, 3.0 - 1.0j])
    A, B, C = abc(phis, 0.7, lin_params)
    for i, ph in enumerate(phis):
        a, b, c = abc(complex(ph), 0.7, lin_params)
        assert np.allclose([A[i], B[i], C[i]], [a, b, c], rtol=1e-14, atol=1e-300)


def test_branch_point_raises(lin_params):
    p = lin_params
    phi = -1j * p.alpha / (p.k * p.m * (p.rho + 1))
    with pytest.raises(ContourSingularity):
        abc(phi, 1.0, p)


def test_singular_denominator_raises():
    p = ModelParams(alpha=2.0, k=1.5, m=0.5, rho=0.0)
    u = 4.0  # beyond c_plus = 2.667, so d is imaginary
    b = 2 * p.alpha
    delta = math.sqrt(4 * p.k**2 * p.m**2 * u**2 - b * b)
    theta = math.atan2(delta, b)
    tau = (2 * math.pi - 2 * theta) / delta
    with pytest.raises(SingularDenominator):
        abc(-1j * u, tau, p)


def test_martingale_integral_basics(lin_params):
    assert martingale_integral(0.0, lin_params) == 0.0
    flat = ModelParams(alpha=3.0, k=0.0, m=0.2, rho=0.0)
    assert np.max(np.abs(martingale_integral(np.array([0.1, 1.0, 5.0]), flat))) < 1e-14


def test_martingale_integral_redundant_paths(lin_params):
    p = lin_params
    # path 1: ODE integration of the Riccati system at phi = -i
    A, B, C = riccati_abc(-1j, 1.0, p.alpha, p.k, p.m, p.rho)
    ode = 2.0 / p.m**2 * (A + B + C).real
    assert martingale_integral(1.0, p) == pytest.approx(ode, abs=1e-10)
    # path 2: differentiate the bracket numerically and integrate back
    x, w = np.polynomial.legendre.leggauss(40)
    t, w = 0.5 * (x + 1.0), 0.5 * w
    h = 1e-5
    M = (martingale_integral(t + h, p) - martingale_integral(t - h, p)) / (2 * h)
    assert w @ M == pytest.approx(martingale_integral(1.0, p), abs=1e-8)


def test_cf_normalisation_and_martingale(lin_params):
    for tau in (0.01, 0.5, 3.0):
        assert cf(0.0, tau, lin_params).value == 1.0
        assert abs(cf(-1j, tau, lin_params).value - 1.0) < 1e-10
    assert cf_values(2.0, 0.0, lin_params, X0=0.3) == pytest.approx(np.exp(0.6j))


def test_cf_deterministic_volatility_limit():
    p = ModelParams(alpha=3.0, k=0.0, m=0.25, rho=0.0)
    phi = np.linspace(-30, 30, 121)
    for tau in (0.1, 1.0, 4.0):
        want = np.exp(1j * phi * 0.2 - p.m**2 * tau / 2 * (phi**2 + 1j * phi))
        got = cf_values(phi, tau, p, X0=0.2)
        assert np.max(np.abs(got - want)) < 1e-13


def test_cf_bounded_and_hermitian():
    rng = np.random.default_rng(3)
    phi = np.linspace(-40, 40, 401)
    for d in random_params(rng, 20):
        p = ModelParams(**d)
        f = cf_values(phi, 0.7, p)
        assert np.all(np.abs(f) <= 1 + 1e-12)
        assert np.allclose(cf_values(-phi, 0.7, p), np.conj(f), rtol=0, atol=1e-14)


def test_cf_matches_riccati_log_cf(lin_params):
    p = lin_params
    for phi in (1.0, -2.5, 3.0 - 0.5j):
        ref = riccati_log_cf(phi, 0.8, p.alpha, p.k, p.m, p.rho, p.z0)
        assert np.log(cf_values(phi, 0.8, p)) == pytest.approx(ref, abs=1e-10)


def test_strip_enforced(lin_params):
    lo, hi = strip_bounds(lin_params)
    c_minus, c_plus = pole_ordinates(lin_params)
    assert (lo, hi) == (-c_plus, -c_minus)
    cf_values(1.0 + 0.99 * hi * 1j, 1.0, lin_params)
    with pytest.raises(StripViolation):
        cf_values(1.0 + 1.01 * hi * 1j, 1.0, lin_params)
    with pytest.raises(StripViolation):
        cf(1.0 + 1.01 * lo * 1j, 1.0, lin_params)


def test_no_branch_crossings_along_real_rays():
    rng = np.random.default_rng(11)
    phi = np.arange(0.0, 60.0, 0.01)
    for d in random_params(rng, 15):
        p = ModelParams(**d)
        for tau in (0.1, 1.0, 5.0):
            assert log_argument_windings(phi, tau, p) == 0
            assert log_argument_windings(-phi, tau, p) == 0
    assert cf(phi[:200], 1.0, p).log_arg_windings == 0


def test_cf_matches_simulated_empirical_cf():
    rng = np.random.default_rng(21)
    phi = np.linspace(0.0, 20.0, 21)
    cfg = SimConfig(n_paths=20_000, n_steps=1000, seed=99)
    for d in random_params(rng, 10):
        p = ModelParams(**d)
        e = simulate("Linear", p, 0.5, cfg)
        vals, errs = empirical_cf(e, phi)
        model = cf_values(phi, 0.5, p)
        assert np.all(np.abs(vals - model) < 3 * errs + 1e-12), d
