"""Adaptive trapezoid rule for one-sided sine/cosine transforms.

Computes, for a vector of abscissae ``x``::

    I(x) = int_0^inf [a(w) cos(w x) + b(w) sin(w x)] dw

where ``(a, b)`` come from one vectorised callable.  The integrals this
package needs are folded full-line Fourier integrals of functions that
are analytic in a strip.  The trapezoid rule is then spectrally accurate,
and its error is aliasing, which shrinks as the step is halved.
Refinement keeps every previous node and stops once two successive
levels agree within tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureNonConvergence


@dataclass(frozen=True)
class QuadratureInfo:
    omega_cut: float
    step: float
    n_nodes: int
    levels: int
    last_change: float


def truncation_point(envelope, env_tol: float, omega_max: float, omega_min: float = 1.0,
                     growth: float = 1.25) -> float:
    """Smallest scanned frequency beyond which ``envelope(w) < env_tol``.

    Scans a geometric grid up to ``omega_max`` and returns the grid point
    after the last one where the envelope is still at or above tolerance.
    """
    n = int(np.ceil(np.log(omega_max / omega_min) / np.log(growth))) + 1
    grid = omega_min * growth ** np.arange(n)
    env = np.asarray(envelope(grid))
    above = np.nonzero(~(env < env_tol))[0]
    if above.size == 0:
        return float(grid[0])
    last = above[-1]
    if last >= n - 1:
        raise QuadratureNonConvergence(
            f"integrand envelope still {env[-1]:.3g} >= {env_tol:.3g} at omega_max={omega_max:g}"
        )
    return float(grid[last + 1])


def _weighted_sum(a, b, w, x):
    ph = np.outer(x, w)
    return np.cos(ph) @ a + np.sin(ph) @ b


def sincos_transform(func, x, *, omega_cut: float, tol_abs, tol_rel: float = 0.0,
                     min_nodes: int = 64, max_levels: int = 16, max_nodes: int = 2**21):
    """Adaptive trapezoid estimate of ``I(x)`` on ``[0, omega_cut]``.

    ``tol_abs`` may be a scalar or an array matching ``x``.  Returns
    ``(values, QuadratureInfo)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    tol_abs = np.broadcast_to(np.asarray(tol_abs, dtype=float), x.shape)

    n = min_nodes
    h = omega_cut / n
    w = h * np.arange(n + 1)
    a, b = func(w)
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    # trapezoid end weights; the integrand is negligible at omega_cut
    a[0] *= 0.5
    b[0] *= 0.5
    a[-1] *= 0.5
    b[-1] *= 0.5
    raw = _weighted_sum(a, b, w, x)
    total = h * raw

    change = np.inf
    for level in range(1, max_levels + 1):
        if 2 * n + 1 > max_nodes:
            break
        w_new = h * (np.arange(n) + 0.5)
        a_new, b_new = func(w_new)
        raw = raw + _weighted_sum(np.asarray(a_new, float), np.asarray(b_new, float), w_new, x)
        h *= 0.5
        n *= 2
        refined = h * raw
        diff = np.abs(refined - total)
        change = float(np.max(diff))
        total = refined
        if np.all(diff <= np.maximum(tol_abs, tol_rel * np.abs(total))):
            return total, QuadratureInfo(omega_cut, h, n + 1, level, change)
    raise QuadratureNonConvergence(
        f"trapezoid refinement did not reach tolerance (last change {change:.3g}, {n + 1} nodes)"
    )
