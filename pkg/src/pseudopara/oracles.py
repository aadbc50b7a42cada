"""Closed-form reference values. Scalar formulas only, no grids, so they
never share a code path with the solver."""
import math
from dataclasses import dataclass

from scipy import integrate

from .errors import PreconditionError


def _check_p(p):
    if not 0 < p < 1:
        raise PreconditionError(f"p must lie in (0, 1), got {p}")


def phi_lambda(t, c, p, lambda_star_value):
    """Solution of ``phi' = Lambda(t) phi^p``, ``phi(0) = c``:
    ``(c^(1-p) + (1-p) Lambda_*(t))^(1/(1-p))``. ``t`` is unused but kept
    for a uniform oracle signature."""
    _check_p(p)
    if c < 0 or lambda_star_value < 0:
        raise PreconditionError("c and Lambda_* must be nonnegative")
    return (c ** (1.0 - p) + (1.0 - p) * lambda_star_value) ** (1.0 / (1.0 - p))


def _lambda_fn(desc):
    if callable(desc):
        return desc
    c = float(desc)
    return lambda s: c


def delayed_lambda_star(t, kappa, lam):
    """``int_0^[t-kappa]_+ Lambda(s + kappa) ds`` for a callable ``lam``."""
    top = max(t - kappa, 0.0)
    if top == 0.0:
        return 0.0
    return integrate.quad(lambda s: lam(s + kappa), 0.0, top, limit=200,
                          epsabs=1e-14, epsrel=1e-12)[0]


def classification_solution(t, kappa, p, lambda_descriptor=1.0, lambda_star=None):
    """Delayed maximal solution ``((1-p) int_0^[t-kappa]_+ Lambda(s+kappa) ds)^(1/(1-p))``.

    ``lambda_descriptor`` is a constant or a callable ``Lambda``;
    ``lambda_star`` may give the antiderivative directly, in which case the
    integral is ``Lambda_*(t) - Lambda_*(kappa)``.
    """
    _check_p(p)
    if kappa < 0:
        raise PreconditionError("kappa must be nonnegative")
    if t <= kappa:
        return 0.0
    if lambda_star is not None:
        val = lambda_star(t) - lambda_star(kappa)
    else:
        val = delayed_lambda_star(t, kappa, _lambda_fn(lambda_descriptor))
    return ((1.0 - p) * max(val, 0.0)) ** (1.0 / (1.0 - p))


def lower_growup_bound(x, t, sigma, p, lambda_star_value, eps0=1.0):
    """``(eps0 (1-p) |x|^sigma Lambda_*(t))^(1/(1-p))``."""
    _check_p(p)
    if not 0 < eps0 <= 1:
        raise PreconditionError("eps0 must lie in (0, 1]")
    if sigma < 0:
        raise PreconditionError("sigma must be nonnegative")
    r = abs(x) if isinstance(x, (int, float)) else math.sqrt(sum(v * v for v in x))
    sp = 1.0 if sigma == 0 else r ** sigma
    return (eps0 * (1.0 - p) * sp * lambda_star_value) ** (1.0 / (1.0 - p))


def psi_counterexample(t, A, p):
    """Solution of ``psi' = psi^p - psi`` with ``psi(0) = A > 1``."""
    _check_p(p)
    if A <= 1:
        raise PreconditionError("A must exceed 1")
    return ((A ** (1.0 - p) - 1.0) * math.exp(-t * (1.0 - p)) + 1.0) ** (1.0 / (1.0 - p))


def viscosity_rescale(u_value, x, t, k, p):
    """Map a solution value of the viscosity-``k`` equation at ``(x, t)`` to
    the ``k = 1`` equation: ``(k^-q u, x / sqrt(k), t / k)``, ``q = 1/(1-p)``."""
    _check_p(p)
    if k <= 0:
        raise PreconditionError("k must be positive")
    q = 1.0 / (1.0 - p)
    return k ** (-q) * u_value, x / math.sqrt(k), t / k


def viscosity_rescale_inverse(U_value, y, tau, k, p):
    _check_p(p)
    if k <= 0:
        raise PreconditionError("k must be positive")
    q = 1.0 / (1.0 - p)
    return k ** q * U_value, y * math.sqrt(k), tau * k


def bihari_bound(p, lambda_star_value):
    """Upper bound ``((1-p) Lambda_*(t))^(1/(1-p))`` for any ``g >= 0`` with
    ``g(t) <= int_0^t Lambda g^p``."""
    _check_p(p)
    return ((1.0 - p) * max(lambda_star_value, 0.0)) ** (1.0 / (1.0 - p))


def critical_p0(eps0, theta_lo, theta_hi):
    """Uniqueness threshold ``p0 = eps0 * theta_lo / theta_hi``.

    The hypothesis is sometimes written with the two bounds the other way
    round; that ratio exceeds 1 and would not restrict ``p`` at all, so the
    lower-over-upper form is used here.
    """
    if theta_hi <= 0:
        raise PreconditionError("theta_hi must be positive")
    return eps0 * theta_lo / theta_hi


@dataclass(frozen=True)
class ClosedFormSolution:
    """Bundles an oracle with its parameters; call with ``(t)`` or ``(x, t)``."""
    kind: str
    p: float
    c: float = 0.0
    kappa: float = 0.0
    sigma: float = 0.0
    A: float = 2.0
    lam: object = 1.0
    lam_star: object = None

    def __call__(self, t, x=0.0):
        ls = self.lam_star or (lambda s: delayed_lambda_star(s, 0.0, _lambda_fn(self.lam)))
        if self.kind == "phi_ode":
            return phi_lambda(t, self.c, self.p, ls(t))
        if self.kind == "maximal_delayed":
            return classification_solution(t, self.kappa, self.p, self.lam, self.lam_star)
        if self.kind == "lower_bound":
            return lower_growup_bound(x, t, self.sigma, self.p, ls(t))
        if self.kind == "psi_counterexample":
            return psi_counterexample(t, self.A, self.p)
        raise PreconditionError(f"unknown oracle kind {self.kind!r}")
