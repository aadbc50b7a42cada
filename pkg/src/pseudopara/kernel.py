"""Bessel potential kernels and the Fourier multipliers of B and G(t).

The kernel of ``(1 - Delta)^(-nu)`` on R^n is

    B_nu(r) = (2 pi)^(-n/2) 2^(1-nu) / Gamma(nu) * r^(nu - n/2) K_(n/2-nu)(r)

with ``K`` the modified Bessel function of the second kind. For ``nu = 1``
this gives ``exp(-r)/2`` in one dimension and ``exp(-r)/(4 pi r)`` in three.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._backend import core
from .errors import PreconditionError


@dataclass(frozen=True)
class KernelQuery:
    n: int
    nu: float
    r: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise PreconditionError(f"dimension must be 1, 2 or 3, got {self.n}")
        if self.nu <= 0:
            raise PreconditionError(f"order nu must be positive, got {self.nu}")
        if self.r < 0:
            raise PreconditionError(f"radius must be nonnegative, got {self.r}")


def phi0(n, r):
    """Profile in the kernel lower bound ``B >= b0 phi0(r) exp(-r)``."""
    r = np.asarray(r, dtype=float)
    if n == 2:
        return np.where(r < 1.0, 1.0 - np.log(np.where(r < 1.0, r, 1.0)), 1.0)
    return r ** ((1.0 - n) / 2.0)


@dataclass(frozen=True)
class KernelBounds:
    n: int
    b0: float

    def phi0(self, r):
        return phi0(self.n, r)

    def lower(self, r):
        return self.b0 * phi0(self.n, r) * np.exp(-np.asarray(r, dtype=float))


def _bessel_k_limit_at_zero(n, nu):
    # r^(nu-n/2) K_(n/2-nu)(r) -> 2^(alpha-1) Gamma(alpha), alpha = nu - n/2 > 0
    alpha = nu - n / 2.0
    return 2.0 ** (alpha - 1.0) * math.gamma(alpha)


def _prefactor(n, nu):
    return (2.0 * math.pi) ** (-n / 2.0) * 2.0 ** (1.0 - nu) / math.gamma(nu)


def bessel_kernel(n, nu, r):
    """Vectorised ``B_nu(r)``; ``r`` may be an array."""
    KernelQuery(n, nu, 0.0)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise PreconditionError("radius must be nonnegative")
    zero = r == 0
    if np.any(zero) and nu <= n / 2.0:
        raise PreconditionError(
            f"B_nu is singular at r = 0 for n={n}, nu={nu}")
    out = np.empty_like(r)
    pos = ~zero
    if np.any(pos):
        rp = r[pos]
        k = core.kve(n / 2.0 - nu, rp) * np.exp(-rp)
        out[pos] = _prefactor(n, nu) * rp ** (nu - n / 2.0) * k
    if np.any(zero):
        out[zero] = _prefactor(n, nu) * _bessel_k_limit_at_zero(n, nu)
    return out


def bessel_kernel_eval(q: KernelQuery) -> float:
    return float(bessel_kernel(q.n, q.nu, q.r))


def bessel_kernel_quadrature(n, nu, r):
    """Independent route to ``B_nu(r)`` for validation tables.

    Uses heat-kernel subordination,
    ``B_nu(r) = Gamma(nu)^-1 int_0^inf s^(nu-1) e^-s (4 pi s)^(-n/2) e^(-r^2/4s) ds``,
    or for ``nu = 1`` and ``n in (1, 3)`` the Fourier cosine/sine integral.
    """
    KernelQuery(n, nu, r)
    if nu == 1.0 and n == 1:
        if r == 0.0:
            return 0.5
        val, _ = integrate.quad(lambda xi: 1.0 / (1.0 + xi * xi), 0.0, np.inf,
                                weight="cos", wvar=r)
        return val / math.pi
    if nu == 1.0 and n == 3 and r > 0.0:
        val, _ = integrate.quad(lambda xi: xi / (1.0 + xi * xi), 0.0, np.inf,
                                weight="sin", wvar=r)
        return val / (2.0 * math.pi ** 2 * r)
    if r == 0.0 and nu <= n / 2.0:
        raise PreconditionError(f"B_nu is singular at r = 0 for n={n}, nu={nu}")

    def integrand(s):
        if s == 0.0:
            return 0.0
        return (s ** (nu - 1.0) * math.exp(-s - r * r / (4.0 * s))
                * (4.0 * math.pi * s) ** (-n / 2.0))

    # split at the integrand's bulk to help QUADPACK near the r^2/4s layer
    mid = max(r / 2.0, 1e-3)
    a, _ = integrate.quad(integrand, 0.0, mid, limit=200, epsabs=0, epsrel=1e-12)
    b, _ = integrate.quad(integrand, mid, np.inf, limit=200, epsabs=0, epsrel=1e-12)
    return (a + b) / math.gamma(nu)


def kernel_lower_bound_check(n, r_samples):
    """Largest ``b0`` with ``B(r) >= b0 phi0(r) exp(-r)`` on the samples.

    Returns ``(b0_estimate, all_pass)``; ``all_pass`` means ``b0 > 0``.
    """
    r = np.asarray(r_samples, dtype=float).ravel()
    if r.size == 0 or np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise PreconditionError("r_samples must be nonempty, finite and positive")
    b = bessel_kernel(n, 1.0, r)
    ratio = b / (phi0(n, r) * np.exp(-r))
    b0 = float(ratio.min())
    return b0, bool(b0 > 0.0)


def multiplier(symbol, xi_sq, t=0.0, k_visc=1.0):
    """Fourier symbol of B (``'bessel'``) or G(t) (``'green'``).

    ``bessel`` is ``1/(1 + k xi^2)``; ``green`` is
    ``exp(-t xi^2 / (1 + k xi^2))``. Both are 1 at ``xi = 0``.
    """
    if t < 0:
        raise PreconditionError(f"t must be nonnegative, got {t}")
    if k_visc <= 0:
        raise PreconditionError(f"viscosity k must be positive, got {k_visc}")
    xi_sq = np.asarray(xi_sq, dtype=float)
    if np.any(xi_sq < 0):
        raise PreconditionError("xi_sq must be nonnegative")
    if symbol == "bessel":
        return 1.0 / (1.0 + k_visc * xi_sq)
    if symbol == "green":
        return np.exp(-t * xi_sq / (1.0 + k_visc * xi_sq))
    raise PreconditionError(f"unknown symbol {symbol!r}")


def kernel_table(n, nu, rmin, rmax, samples):
    """Rows ``(r, B_nu(r), lower_bound, ratio)`` on a uniform radius grid.

    ``lower_bound`` is ``b0 phi0(r) exp(-r)`` with ``b0`` fitted on the same
    radii (``nu = 1`` profile); ``ratio`` is ``B / lower_bound``.
    """
    if samples < 1 or rmin <= 0 or rmax < rmin:
        raise PreconditionError("need samples >= 1 and 0 < rmin <= rmax")
    r = np.linspace(rmin, rmax, samples)
    b = bessel_kernel(n, nu, r)
    shape = phi0(n, r) * np.exp(-r)
    b0 = float(np.min(b / shape))
    lower = b0 * shape
    return np.column_stack([r, b, lower, b / lower])
