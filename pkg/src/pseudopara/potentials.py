"""Potential families ``V(x, t) = Lambda(t) |x|^sigma`` and their time factors.

The time factor is

    Lambda(t) = zeta(t) (1 + t)^nu t^k_exp log(e + t)^log_exp

so ``nu``/``k_exp`` carry the power part and ``log_exp`` the logarithmic
part of the ``t^k (log t)^nu`` examples. ``zeta`` is a constant, a table
of ``(t, value)`` pairs, or any callable.
"""
import math
import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import integrate, optimize

from .errors import ConfigError, PreconditionError
from .operators import in_jn_plus


@dataclass(frozen=True)
class PotentialSpec:
    sigma: float = 0.0
    nu: float = 0.0
    k_exp: float = 0.0
    log_exp: float = 0.0
    zeta: Any = 1.0
    t_clamp: float = 1e-6
    shift: float = 0.0
    bracket: bool = False

    def __post_init__(self):
        if self.t_clamp <= 0:
            raise PreconditionError("t_clamp must be positive")
        if self.sigma < 0:
            raise PreconditionError("negative sigma gives a singular potential at x = 0")
        z = self.zeta
        if isinstance(z, (list, tuple)):
            arr = np.asarray(z, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2 or np.any(np.diff(arr[:, 0]) <= 0):
                raise ConfigError("zeta table must be increasing (t, value) pairs")
            if np.any(arr[:, 1] < 0):
                raise ConfigError("zeta table values must be nonnegative")
            object.__setattr__(self, "zeta", tuple(map(tuple, arr)))
        elif not callable(z):
            if float(z) < 0:
                raise ConfigError("zeta must be nonnegative")
            object.__setattr__(self, "zeta", float(z))

    @classmethod
    def from_dict(cls, d):
        keys = {"sigma", "nu", "k", "k_exp", "log_exp", "zeta", "t_clamp", "bracket"}
        bad = set(d) - keys
        if bad:
            raise ConfigError(f"unknown potential keys: {sorted(bad)}")
        kw = dict(d)
        if "k" in kw:
            kw["k_exp"] = kw.pop("k")
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        z = self.zeta
        if callable(z):
            raise ConfigError("callable zeta cannot be serialised")
        return {"sigma": self.sigma, "nu": self.nu, "k": self.k_exp,
                "log_exp": self.log_exp, "zeta": [list(r) for r in z] if isinstance(z, tuple) else z,
                "t_clamp": self.t_clamp, "bracket": self.bracket}

    @property
    def is_zero(self):
        return not callable(self.zeta) and not isinstance(self.zeta, tuple) and self.zeta == 0.0

    @property
    def time_only(self):
        return self.sigma == 0.0

    @property
    def time_power(self):
        return self.nu + self.k_exp

    def shifted(self, tau):
        """The potential ``V^tau(x, t) = V(x, t + tau)``."""
        return PotentialSpec(self.sigma, self.nu, self.k_exp, self.log_exp,
                             self.zeta, self.t_clamp, self.shift + tau, self.bracket)

    def sigma_admissible(self, n):
        return in_jn_plus(self.sigma, n)

    def _zeta(self, t):
        z = self.zeta
        if callable(z):
            return np.asarray(z(t), dtype=float)
        if isinstance(z, tuple):
            arr = np.asarray(z)
            return np.interp(t, arr[:, 0], arr[:, 1])
        return np.full_like(t, z)

    def time_factor(self, t):
        """Lambda(t) with the shift applied; vectorised in ``t``."""
        t = np.asarray(t, dtype=float) + self.shift
        if np.any(t < 0):
            raise PreconditionError("potential evaluated at negative time")
        tc = np.maximum(t, self.t_clamp)
        out = self._zeta(tc)
        if self.nu:
            out = out * (1.0 + t) ** self.nu
        if self.k_exp:
            out = out * (tc if self.k_exp < 0 else t) ** self.k_exp
        if self.log_exp:
            out = out * np.log(math.e + t) ** self.log_exp
        return out

    def spatial(self, r):
        """``|x|^sigma``, or ``(1 + |x|^2)^(sigma/2)`` when ``bracket`` is set."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.sigma == 0.0:
            return np.ones_like(r)
        if self.bracket:
            return (1.0 + r * r) ** (self.sigma / 2.0)
        return r ** self.sigma


def eval_potential(spec: PotentialSpec, x, t):
    """``V(x, t)``; ``x`` is a scalar position or a point in R^n."""
    if t < 0:
        raise PreconditionError(f"t must be nonnegative, got {t}")
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    return float(spec.time_factor(t) * spec.spatial(r))


def radial_cutoff(r, L, inner=0.6, outer=0.75):
    """Smooth radial cutoff: 1 for ``r <= inner L``, 0 for ``r >= outer L``."""
    r = np.asarray(r, dtype=float)
    s = np.clip((r - inner * L) / ((outer - inner) * L), 0.0, 1.0)
    # C-infinity step built from exp(-1/x)
    a = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class LambdaStar:
    times: np.ndarray
    values: np.ndarray
    closed_form: Any = None

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


def _closed_form(spec):
    if callable(spec.zeta) or isinstance(spec.zeta, tuple) or spec.log_exp or spec.shift:
        return None
    c = spec.zeta
    if spec.nu == 0 and spec.k_exp > -1:
        k = spec.k_exp
        return lambda t: c * np.asarray(t, dtype=float) ** (k + 1) / (k + 1)
    if spec.k_exp == 0:
        nu = spec.nu
        if nu == -1:
            return lambda t: c * np.log1p(np.asarray(t, dtype=float))
        return lambda t: c * ((1.0 + np.asarray(t, dtype=float)) ** (nu + 1) - 1.0) / (nu + 1)
    return None


def lambda_star_numeric(spec: PotentialSpec, t_mesh) -> LambdaStar:
    """Cumulative trapezoid integral of Lambda on ``t_mesh`` (starting at 0)."""
    t = np.asarray(t_mesh, dtype=float)
    if t.ndim != 1 or t.size < 1 or t[0] != 0 or np.any(np.diff(t) <= 0):
        raise PreconditionError("t_mesh must be increasing and start at 0")
    if spec.k_exp <= -1:
        warnings.warn("time factor is not integrable at t = 0; evaluating with t_clamp",
                      RuntimeWarning, stacklevel=2)
    lam = spec.time_factor(t)
    vals = np.concatenate([[0.0], integrate.cumulative_trapezoid(lam, t)])
    return LambdaStar(t, vals, _closed_form(spec))


def lambda_star_at(spec, t_points):
    """Adaptive-quadrature Lambda_* at arbitrary (possibly huge) times."""
    pts = np.asarray(t_points, dtype=float)
    # extra nodes at the clamp and at 1 keep quad from missing a clamped spike near 0
    knots = [k for k in (spec.t_clamp, 1.0) if k < pts.max()]
    grid = np.unique(np.concatenate([[0.0], knots, pts]))
    f = lambda s: float(spec.time_factor(s))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pieces = [integrate.quad(f, a, b, limit=200)[0] if b > a else 0.0
                  for a, b in zip(grid[:-1], grid[1:])]
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    return cum[np.searchsorted(grid, pts)]


@dataclass(frozen=True)
class AsymptoticDescriptor:
    """Leading behaviour of Lambda_* for ``Lambda ~ t^k (log t)^nu``.

    ``kind`` is ``'loglog'``, ``'log'`` or ``'power'``; the shape is
    ``t^t_exp (log t)^log_exp`` (or ``log log t`` for ``'loglog'``).
    """
    kind: str
    t_exp: float
    log_exp: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "loglog":
            return np.log(np.log(t))
        return t ** self.t_exp * np.log(t) ** self.log_exp

    @property
    def leading_exponent(self):
        return self.t_exp

    def describe(self):
        if self.kind == "loglog":
            return "log(log t)"
        if self.t_exp == 0 and self.log_exp == 0:
            return "1"
        parts = []
        if self.t_exp:
            parts.append("t" if self.t_exp == 1 else f"t^{self.t_exp:g}")
        if self.log_exp:
            parts.append("log t" if self.log_exp == 1 else f"(log t)^{self.log_exp:g}")
        return " ".join(parts)


def lambda_star_asymptotic(k, nu) -> AsymptoticDescriptor:
    if k == -1 and nu == -1:
        return AsymptoticDescriptor("loglog", 0.0, 0.0)
    if k == -1:
        return AsymptoticDescriptor("log", 0.0, max(nu + 1.0, 0.0))
    e = max(k + 1.0, 0.0)
    return AsymptoticDescriptor("power", e, (nu / (k + 1.0)) * e)


@dataclass
class EpsilonABResult:
    c_estimate: float
    member: bool
    samples: np.ndarray
    ratios: np.ndarray


def epsilon_ab_check(spec, eps, t_range=(1.0,), steps=12, factor=2.0, spread=0.2):
    """Estimate ``inf Lambda_*(eps t) / Lambda_*(t)`` over ``t = t0/eps * factor^i``."""
    if not 0 < eps < 1:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}")
    t0 = float(np.atleast_1d(t_range)[0])
    if t0 <= 0:
        raise PreconditionError("t_range must lie in (0, inf)")
    ts = t0 / eps * factor ** np.arange(steps)
    with np.errstate(all="ignore"):
        vals = lambda_star_at(spec, np.concatenate([eps * ts, ts]))
        ratios = vals[:steps] / vals[steps:]
    ratios = np.where(np.isfinite(ratios), ratios, 0.0)
    c = float(ratios.min())
    tail = ratios[-3:]
    stable = bool(tail.min() > 0 and tail.max() <= (1 + spread) * tail.min())
    return EpsilonABResult(c, bool(c > 0 and stable), ts, ratios)


def critical_exponents(sigma, nu, p):
    if not 0 < p < 1:
        raise PreconditionError(f"p must lie in (0, 1), got {p}")
    a0 = sigma / (1.0 - p)
    ac = (sigma + 2.0 * max(nu + 1.0, 0.0)) / (1.0 - p)
    return a0, ac


def classify_regime(a, sigma, nu, p, rtol=1e-9):
    _, ac = critical_exponents(sigma, nu, p)
    if abs(a - ac) <= rtol * max(1.0, abs(ac)):
        return "critical"
    return "supercritical" if a > ac else "subcritical"


def convexity_certificate(spec, taus, t_samples):
    """``alpha(tau) = min_t Lambda(t + tau) / Lambda(t)`` over the samples.

    The separable form makes the spatial factor cancel. The certificate
    holds when every ``alpha > 0`` and ``alpha -> 1`` as ``tau -> 0``.
    """
    taus = np.asarray(taus, dtype=float)
    ts = np.asarray(t_samples, dtype=float)
    base = spec.time_factor(ts)
    pos = base > 0
    alpha = np.array([np.min(spec.time_factor(ts[pos] + tau) / base[pos]) if pos.any() else 1.0
                      for tau in taus])
    small = taus <= max(1e-3, taus.min())
    ok = bool(np.all(alpha > 0) and np.all(np.abs(alpha[small] - 1.0) < 1e-2))
    return alpha, ok


def upsilon(spec, t_end, theta, L=1.0):
    """Contraction constant ``theta^-1 max Lambda`` over ``[0, t_end]``."""
    ts = np.linspace(0.0, t_end, 257)
    scale = L ** spec.sigma if spec.sigma else 1.0
    return float(np.max(spec.time_factor(ts)) * scale / theta)


def contraction_slab_length(ups, lip, theta):
    """Largest ``T`` with ``ups * lip * beta(T) * T <= 1/2``."""
    if ups <= 0 or lip <= 0:
        return math.inf
    g = lambda T: ups * lip * math.exp((1.0 / theta - 1.0) * T) * T - 0.5
    hi = 0.5 / (ups * lip)
    return optimize.brentq(g, 0.0, hi)
