"""Pure numpy versions of the hot kernels.

Selected automatically when the compiled ``_core`` extension is missing or
when ``PSEUDOPARA_PURE_PYTHON`` is set. Signatures match ``_core.pyx``.
"""
import math

import numpy as np


def source_term(u, profile, scale, p, m):
    """Return ``scale * profile * F(max(u, 0))``.

    ``m <= 0`` selects the raw power ``s**p``; otherwise the level-``m``
    regularisation (linear below ``m**-2``).
    """
    s = np.maximum(u, 0.0)
    if m > 0:
        thr = m ** -2.0
        slope = m ** (2.0 * (1.0 - p))
        f = np.where(s >= thr, s ** p, slope * s)
    else:
        f = s ** p
    return scale * profile * f


def clamp_nonneg(u):
    """Clamp ``u`` to ``>= 0`` in place; return the most negative entry seen."""
    lowest = float(u.min())
    if lowest < 0.0:
        np.maximum(u, 0.0, out=u)
        return lowest
    return 0.0


def weighted_sup(values, weight, mask):
    return float(np.max(np.abs(values[mask]) * weight[mask]))


def _kve_nodes(alpha, x):
    a = abs(alpha)
    h = min(0.1, 0.5 / math.sqrt(x))
    tmax = math.acosh(1.0 + 45.0 / x)
    for _ in range(4):
        tmax = math.acosh(1.0 + (45.0 + a * tmax) / x)
    n = int(math.ceil(tmax / h)) + 1
    return a, h, n


def kve(alpha, x):
    """Exponentially scaled ``K_alpha``: ``exp(x) * K_alpha(x)`` for ``x > 0``.

    Trapezoid rule on ``int_0^inf exp(-x (cosh t - 1)) cosh(alpha t) dt``;
    the integrand is analytic in a strip so the rule converges geometrically.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    flat = x.ravel()
    res = out.ravel()
    for i, xi in enumerate(flat):
        a, h, n = _kve_nodes(alpha, xi)
        t = h * np.arange(n)
        sh = np.sinh(0.5 * t)
        e = -2.0 * xi * sh * sh
        terms = 0.5 * (np.exp(e + a * t) + np.exp(e - a * t))
        res[i] = h * (terms.sum() - 0.5 * terms[0])
    return out
