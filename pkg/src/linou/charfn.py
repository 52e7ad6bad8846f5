"""Characteristic function of the Linear model.

The CF of the centred log-return ``X(tau)`` is affine-quadratic in the
initial driver ``Z0``::

    f(phi, tau; X0, Z0) = exp{-i phi (m^2/2) IM(tau) + A + B Z0 + C Z0^2 + i phi X0}

where ``IM(tau)`` is the integrated martingale correction.  The
coefficients use the auxiliary functions::

    Phi = k m phi / alpha
    b   = 2 alpha (1 - i rho Phi)
    d   = sqrt(b^2 + 4 alpha^2 Phi^2)        (principal branch, Re d >= 0)
    g   = (b - d) / (b + d)
    h   = i alpha m Phi / k = i m^2 phi
    n   = alpha (b - d) / (2 k^2)

Every ``b - d`` is evaluated as ``-4 k^2 m^2 phi^2 / (b + d)``.  That
removes the cancellation near ``phi = 0`` (which the finite-difference
cumulant checks depend on) and keeps ``k = 0`` finite.  The two
logarithms in A stay separate principal logs; they are never merged into
the log of a ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContourSingularity, SingularDenominator, StripViolation
from .params import ModelParams

DENOM_TOL = 1e-14


@dataclass(frozen=True)
class AuxCoefficients:
    b: np.ndarray | complex
    d: np.ndarray | complex
    g: np.ndarray | complex
    h: np.ndarray | complex
    n: np.ndarray | complex
    Phi: np.ndarray | complex


@dataclass(frozen=True)
class CfValue:
    value: np.ndarray | complex
    log_arg_windings: int = 0

    def __complex__(self):
        return complex(self.value)


def _aux(phi, p: ModelParams):
    phi = np.asarray(phi, dtype=complex)
    a, k, m = p.alpha, p.k, p.m
    kmphi = k * m * phi
    Phi = kmphi / a
    b = 2.0 * a * (1.0 - 1j * p.rho * Phi)
    d = np.sqrt(b * b + 4.0 * kmphi * kmphi)
    s = b + d
    m2phi2 = m * m * phi * phi
    bmd = -4.0 * k * k * m2phi2 / s
    g = bmd / s
    h = 1j * m * m * phi
    n = -2.0 * a * m2phi2 / s
    return Phi, b, d, s, bmd, g, h, n, m2phi2


def aux_coefficients(phi, p: ModelParams) -> AuxCoefficients:
    Phi, b, d, _, _, g, h, n, _ = _aux(phi, p)
    scalar = np.ndim(phi) == 0
    pick = (lambda x: complex(x)) if scalar else (lambda x: x)
    return AuxCoefficients(b=pick(b), d=pick(d), g=pick(g), h=pick(h), n=pick(n), Phi=pick(Phi))


def abc(phi, tau: float, p: ModelParams):
    """Return the coefficient triple ``(A, B, C)`` at ``(phi, tau)``.

    Works elementwise on array ``phi``.  Raises
    :class:`ContourSingularity` at the branch points where ``d`` vanishes
    and :class:`SingularDenominator` when ``1 - g`` or ``1 - g e^{-d tau}``
    is numerically zero.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    phi_arr = np.asarray(phi, dtype=complex)
    if tau == 0:
        zero = np.zeros_like(phi_arr)
        return _unwrap(zero, phi), _unwrap(zero, phi), _unwrap(zero.copy(), phi)

    a, k = p.alpha, p.k
    _, b, d, s, bmd, g, h, n, m2phi2 = _aux(phi_arr, p)

    if np.any(np.abs(d) < DENOM_TOL * 2.0 * a):
        raise ContourSingularity("phi sits on a branch point of the characteristic function")

    e1 = np.exp(-d * tau)
    em1 = np.expm1(-d * tau)
    e2 = np.exp(-0.5 * d * tau)
    em2 = np.expm1(-0.5 * d * tau)
    one_m_g = 1.0 - g
    one_m_ge1 = 1.0 - g * e1
    if np.any(np.abs(one_m_g) < DENOM_TOL) or np.any(np.abs(one_m_ge1) < DENOM_TOL):
        raise SingularDenominator("1 - g or 1 - g exp(-d tau) vanishes")

    d3 = d * d * d
    nmh = n - h
    den = one_m_g * one_m_ge1
    lin = 0.5 * h + 2.0 * a * nmh / d + 2.0 * k * k * (nmh / d) ** 2 + 0.25 * bmd
    logs = -0.5 * (np.log1p(-g * e1) - np.log1p(-g))
    gph = (g + 1.0) * h - 2.0 * n
    # 2 k^2 g (alpha (b+d)/(2k^2) - h)^2 rewritten without 1/k^2
    big = -2.0 * m2phi2 * (a * s - 2.0 * k * k * h) ** 2 / (s * s)
    brace = big + 2.0 * k * k * (gph**2 + 2.0 * (n - g * h) * nmh + g * nmh**2)
    t1 = -em1 / den * brace / d3
    t2 = -4.0 * gph * (a * b - 2.0 * k * k * h) / d3 * (1.0 + g * e2) * em2 / den
    A = lin * tau + logs + t1 + t2
    B = 2.0 * em2 * (h * (1.0 - g * e2) + n * em2) / (d * one_m_ge1)
    C = (-m2phi2 / s) * (-em1) / one_m_ge1
    return _unwrap(A, phi), _unwrap(B, phi), _unwrap(C, phi)


def _unwrap(x, like):
    return complex(x) if np.ndim(like) == 0 else x


def _exponent_at_minus_i(tau, p: ModelParams, Z0: float):
    A, B, C = abc(-1j, tau, p)
    return (A + B * Z0 + C * Z0 * Z0).real


def martingale_integral(tau, p: ModelParams, X0: float = 0.0, Z0: float | None = None):
    """Integrated martingale correction ``int_0^tau M(t) dt``.

    ``M`` is the tau-derivative of ``(2/m^2) [A + B Z0 + C Z0^2](-i, tau)``
    and the bracket vanishes at ``tau = 0``, so the integral is the bracket
    itself.  ``X0`` drops out and is accepted only for signature symmetry.
    Vectorised over ``tau``.
    """
    z0 = p.z0 if Z0 is None else Z0
    scale = 2.0 / (p.m * p.m)
    taus = np.asarray(tau, dtype=float)
    if taus.ndim == 0:
        return scale * _exponent_at_minus_i(float(taus), p, z0)
    return np.array([scale * _exponent_at_minus_i(float(t), p, z0) for t in taus.ravel()]).reshape(
        taus.shape
    )


def pole_ordinates(p: ModelParams) -> tuple[float, float]:
    """Return ``(c_minus, c_plus) = alpha / (k m (rho -/+ 1))``.

    ``E[exp(u X)]`` stays finite at every horizon for ``c_minus < u < c_plus``.
    """
    km = p.k * p.m
    c_minus = p.alpha / (km * (p.rho - 1.0)) if km * (1.0 - p.rho) > 0 else -math.inf
    c_plus = p.alpha / (km * (p.rho + 1.0)) if km * (1.0 + p.rho) > 0 else math.inf
    return c_minus, c_plus


def strip_bounds(p: ModelParams) -> tuple[float, float]:
    """Open interval for ``Im(phi)`` inside which the CF is regular."""
    c_minus, c_plus = pole_ordinates(p)
    return -c_plus, -c_minus


def in_strip(phi, p: ModelParams) -> bool:
    lo, hi = strip_bounds(p)
    im = np.imag(np.asarray(phi, dtype=complex))
    return bool(np.all((im > lo) & (im < hi)))


def cf_values(phi, tau: float, p: ModelParams, X0: float = 0.0, Z0: float | None = None,
              check_strip: bool = True):
    """Raw CF values (complex scalar or ndarray); no branch bookkeeping."""
    z0 = p.z0 if Z0 is None else Z0
    phi_arr = np.asarray(phi, dtype=complex)
    if check_strip and not in_strip(phi_arr, p):
        lo, hi = strip_bounds(p)
        raise StripViolation(f"Im(phi) must lie in ({lo:.6g}, {hi:.6g})")
    if tau == 0:
        return _unwrap(np.exp(1j * phi_arr * X0), phi)
    A, B, C = abc(phi_arr, tau, p)
    shift = _exponent_at_minus_i(tau, p, z0)
    expo = -1j * phi_arr * shift + A + B * z0 + C * z0 * z0 + 1j * phi_arr * X0
    return _unwrap(np.exp(expo), phi)


def log_argument_windings(phi, tau: float, p: ModelParams) -> int:
    """Count branch crossings of ``arg(1 - g e^{-d tau})`` along ``phi``.

    ``phi`` is read in array order as a sampled path; a jump of the
    principal argument larger than pi between neighbours counts as one
    crossing of the log branch cut.
    """
    phi_arr = np.atleast_1d(np.asarray(phi, dtype=complex)).ravel()
    if tau == 0 or phi_arr.size < 2:
        return 0
    _, _, d, _, _, g, _, _, _ = _aux(phi_arr, p)
    arg = np.angle(1.0 - g * np.exp(-d * tau))
    return int(np.count_nonzero(np.abs(np.diff(arg)) > math.pi))


def cf(phi, tau: float, p: ModelParams, X0: float = 0.0, Z0: float | None = None) -> CfValue:
    """Characteristic function of ``X(tau)`` under the pricing measure.

    Parameters
    ----------
    phi : complex or array_like
        Transform variable; complex values must stay inside the strip
        returned by :func:`strip_bounds`.
    tau : float
        Horizon in years.
    p : ModelParams
    X0, Z0 : float
        Initial log-return and volatility driver (``Z0`` defaults to
        ``p.z0``).

    Returns
    -------
    CfValue
        ``value`` has the shape of ``phi``.  For array input
        ``log_arg_windings`` counts branch crossings along the array order.
    """
    value = cf_values(phi, tau, p, X0=X0, Z0=Z0)
    windings = log_argument_windings(phi, tau, p) if np.ndim(phi) else 0
    return CfValue(value=value, log_arg_windings=windings)
