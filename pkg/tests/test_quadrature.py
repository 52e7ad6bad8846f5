import math

import numpy as np
import pytest

from linou.errors import QuadratureNonConvergence
from linou.quadrature import sincos_transform, truncation_point


def test_gaussian_cosine_transform():
    # int_0^inf exp(-w^2/2) cos(w x) dw = sqrt(pi/2) exp(-x^2/2)
    x = np.linspace(-3, 3, 13)

    def func(w):
        return np.exp(-w * w / 2), np.zeros_like(w)

    val, info = sincos_transform(func, x, omega_cut=12.0, tol_abs=1e-13)
    assert np.allclose(val, math.sqrt(math.pi / 2) * np.exp(-x * x / 2), atol=1e-12)
    assert info.levels >= 1


def test_lorentzian_sine_transform():
    # int_0^inf w exp(-a w) sin(w x) dw = 2 a x / (a^2 + x^2)^2
    a = 2.0
    x = np.array([0.0, 0.5, 1.0, 3.0])

    def func(w):
        return np.zeros_like(w), w * np.exp(-a * w)

    val, _ = sincos_transform(func, x, omega_cut=25.0, tol_abs=1e-12)
    assert np.allclose(val, 2 * a * x / (a * a + x * x) ** 2, atol=1e-9)


def test_refinement_budget_exhausted():
    def func(w):
        return np.cos(37 * w), np.zeros_like(w)

    with pytest.raises(QuadratureNonConvergence):
        sincos_transform(func, [0.3], omega_cut=1e4, tol_abs=1e-15, max_nodes=2**10)


def test_truncation_point():
    def env(w):
        return np.exp(-w)

    w = truncation_point(env, 1e-10, 1e3)
    assert math.exp(-w) < 1e-10
    assert math.exp(-w / 1.25) >= 1e-10 * math.exp(-1e-9)
    with pytest.raises(QuadratureNonConvergence):
        truncation_point(lambda w: 1.0 / w, 1e-10, 1e3)
