"""Periodic grids, the operators B and G(t) as Fourier multipliers, and
weighted sup-norms ``||f||_{R,a} = sup (R^2 + |x|^2)^(-a/2) |f(x)|``.

The truncation of R^n is the torus [-L, L)^n with N nodes per axis. Any
comparison that depends on |x| is only trusted inside ``inner_radius``.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._backend import core
from .errors import PreconditionError


@dataclass(frozen=True)
class GridSpec:
    dim: int
    L: float
    N: int
    inner_radius: float = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise PreconditionError(f"grid dimension must be 1 or 2, got {self.dim}")
        if not self.L > 0:
            raise PreconditionError(f"half-width L must be positive, got {self.L}")
        if self.N < 2 or self.N % 2:
            raise PreconditionError(f"N must be a positive even integer, got {self.N}")
        if self.inner_radius is None:
            object.__setattr__(self, "inner_radius", self.L / 2.0)
        if not 0 < self.inner_radius < self.L:
            raise PreconditionError("inner_radius must lie in (0, L)")

    @property
    def dx(self):
        return 2.0 * self.L / self.N

    @property
    def shape(self):
        return (self.N,) * self.dim

    def axis(self):
        return _axis(self.L, self.N)

    def coords(self):
        """Tuple of coordinate arrays broadcast to the grid shape."""
        return _coords(self)

    def radius(self):
        return _radius(self)

    def xi_sq(self):
        """|xi|^2 on the ``rfftn`` frequency layout."""
        return _xi_sq(self)

    def inner_mask(self):
        return _inner_mask(self)

    def zeros(self):
        return Field(self, np.zeros(self.shape))

    def constant(self, c):
        return Field(self, np.full(self.shape, float(c)))

    def from_function(self, fn):
        """Sample ``fn(r)`` (radial) on the grid."""
        return Field(self, np.asarray(fn(self.radius()), dtype=float))


@lru_cache(maxsize=64)
def _axis(L, N):
    a = -L + (2.0 * L / N) * np.arange(N)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=64)
def _coords(g):
    ax = _axis(g.L, g.N)
    if g.dim == 1:
        out = (ax,)
    else:
        out = tuple(np.meshgrid(ax, ax, indexing="ij"))
    for c in out:
        c.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def _radius(g):
    r = np.sqrt(sum(c * c for c in _coords(g)))
    r.setflags(write=False)
    return r


@lru_cache(maxsize=64)
def _xi_sq(g):
    full = np.fft.fftfreq(g.N, d=g.dx) * 2.0 * np.pi
    half = np.fft.rfftfreq(g.N, d=g.dx) * 2.0 * np.pi
    if g.dim == 1:
        xs = half ** 2
    else:
        xs = full[:, None] ** 2 + half[None, :] ** 2
    xs.setflags(write=False)
    return xs


@lru_cache(maxsize=64)
def _inner_mask(g):
    m = _radius(g) <= g.inner_radius
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class Field:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise PreconditionError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("field has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def nonneg(self):
        return bool(np.all(self.values >= 0.0))

    def sup(self, masked=False):
        v = self.values[self.grid.inner_mask()] if masked else self.values
        return float(np.max(np.abs(v))) if v.size else 0.0


@dataclass(frozen=True)
class WeightParams:
    R: float = 1.0
    a: float = 0.0

    def __post_init__(self):
        if not self.R > 0:
            raise PreconditionError(f"R must be positive, got {self.R}")

    def weight(self, r):
        """(R^2 + r^2)^(-a/2)."""
        return (self.R ** 2 + np.asarray(r, dtype=float) ** 2) ** (-self.a / 2.0)

    def growth(self, r):
        """Reciprocal of the weight, (R^2 + r^2)^(a/2)."""
        return (self.R ** 2 + np.asarray(r, dtype=float) ** 2) ** (self.a / 2.0)

    def contraction_ok(self, n, theta):
        return (1.0 - theta) * self.R ** 2 >= contraction_rhs(n, self.a)


def contraction_rhs(n, a):
    """Right side of the condition ``(1 - theta) R^2 >= ...`` for weight ``a``."""
    if a >= 0:
        return a * (n + max(a - 2.0, 0.0))
    return -a * (n - max(-(a + 2.0), 0.0))


def in_jn(d, n):
    return d * (d + n - 2.0) >= 0.0


def in_jn_plus(d, n):
    return d >= 0.0 and in_jn(d, n)


def _as_array(f):
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


def apply_multiplier(grid, values, mult):
    axes = tuple(range(grid.dim))
    return np.fft.irfftn(np.fft.rfftn(values, axes=axes) * mult, s=grid.shape, axes=axes)


def bessel_symbol(grid, k_visc=1.0):
    return 1.0 / (1.0 + k_visc * grid.xi_sq())


def green_symbol(grid, t, k_visc=1.0):
    xs = grid.xi_sq()
    return np.exp(-t * xs / (1.0 + k_visc * xs))


def apply_bessel(f: Field, k_visc=1.0) -> Field:
    return Field(f.grid, apply_multiplier(f.grid, f.values, bessel_symbol(f.grid, k_visc)))


def apply_green(f: Field, t, k_visc=1.0) -> Field:
    if t < 0:
        raise PreconditionError(f"t must be nonnegative, got {t}")
    if k_visc <= 0:
        raise PreconditionError(f"viscosity k must be positive, got {k_visc}")
    if t == 0:
        return f
    return Field(f.grid, apply_multiplier(f.grid, f.values, green_symbol(f.grid, t, k_visc)))


def weighted_norm(f, w: WeightParams, masked=False, grid=None):
    grid = f.grid if isinstance(f, Field) else grid
    vals = _as_array(f)
    mask = grid.inner_mask() if masked else np.ones(grid.shape, dtype=bool)
    return core.weighted_sup(vals, w.weight(grid.radius()), mask)


def default_tol(f, rel=1e-6, abs_=1e-8):
    return abs_ + rel * float(np.max(np.abs(_as_array(f))))


def random_band_limited(grid, rng, nonneg=False):
    """Smooth random field using only the lowest N/4 modes per axis."""
    kmax = grid.N // 8  # |j| < N/8 on each side = N/4 modes per axis
    spec = np.zeros(np.fft.rfftn(np.zeros(grid.shape)).shape, dtype=complex)
    if grid.dim == 1:
        spec[:kmax] = rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)
    else:
        rows = np.r_[0:kmax, grid.N - kmax + 1:grid.N]
        blk = rng.standard_normal((rows.size, kmax)) + 1j * rng.standard_normal((rows.size, kmax))
        spec[np.ix_(rows, np.arange(kmax))] = blk
    vals = np.fft.irfftn(spec, s=grid.shape, axes=tuple(range(grid.dim)))
    vals /= np.max(np.abs(vals))
    if nonneg:
        vals = vals - vals.min()
    return Field(grid, vals)


@dataclass
class BoundReport:
    precondition_ok: bool
    message: str = ""
    max_ratio_bessel: float = 0.0
    bessel_bound: float = 0.0
    max_ratio_green: dict = field(default_factory=dict)
    green_bound: dict = field(default_factory=dict)
    passed: bool = False


def verify_operator_bounds(w: WeightParams, theta, trials, grid=None,
                           t_samples=(0.1, 1.0), seed=0, masked=False, tol=1e-6):
    """Check ``||B phi|| <= theta^-1 ||phi||`` and ``||G(t) phi|| <= beta(t) ||phi||``.

    ``beta(t) = exp((theta^-1 - 1) t)``. Half the trial fields are random
    band-limited fields, the other half are those fields multiplied by the
    growth profile ``(R^2 + |x|^2)^(a/2)`` so the weight is exercised.
    """
    if not 0 < theta < 1:
        raise PreconditionError(f"theta must lie in (0, 1), got {theta}")
    if trials < 1:
        raise PreconditionError("trials must be positive")
    grid = grid or GridSpec(1, 32.0, 256)
    rhs = contraction_rhs(grid.dim, w.a)
    lhs = (1.0 - theta) * w.R ** 2
    if lhs < rhs:
        return BoundReport(False, f"(1-theta) R^2 = {lhs:g} < {rhs:g} required for a={w.a:g}")
    rng = np.random.default_rng(seed)
    growth = w.growth(grid.radius())
    bsym = bessel_symbol(grid)
    gsyms = {t: green_symbol(grid, t) for t in t_samples}
    rb = 0.0
    rg = {t: 0.0 for t in t_samples}
    for i in range(trials):
        phi = random_band_limited(grid, rng).values
        if i % 2:
            phi = phi * growth
        base = weighted_norm(phi, w, masked, grid)
        rb = max(rb, weighted_norm(apply_multiplier(grid, phi, bsym), w, masked, grid) / base)
        for t, sym in gsyms.items():
            rg[t] = max(rg[t], weighted_norm(apply_multiplier(grid, phi, sym), w, masked, grid) / base)
    bb = 1.0 / theta
    gb = {t: math.exp((1.0 / theta - 1.0) * t) for t in t_samples}
    ok = rb <= bb + tol and all(rg[t] <= gb[t] + tol for t in t_samples)
    return BoundReport(True, "", rb, bb, rg, gb, ok)


def sandwich_constants(n, d, eps, theta, rho=None):
    """Constants ``rho0`` (B sandwich), ``k0``/``rho_g`` (upper G bound) and
    the admissible ``k`` for the lower G bound, following the supersolution
    computations for ``(rho + kt + |x|^2)^(d/2)``."""
    c = n * abs(d) + abs(d * (d - 2.0))
    rho1 = c / (1.0 / eps - 1.0)
    rho2 = c / (1.0 - theta)
    out = {
        "rho1": rho1,
        "rho2": rho2,
        "rho0": max(rho1, rho2),
        "k0": 4.0 * (n + abs(d - 2.0)),
        "rho_g": 2.0 * abs((d - 2.0) * (n + abs(d - 4.0))),
    }
    if rho is not None:
        neg = max(-(d - 2.0), 0.0)
        k1 = (4.0 + 2.0 * neg) / (1.0 + 2.0 * n / rho)
        k2 = (2.0 + 2.0 * neg) / (1.0 + 1.0 / rho)
        out["k1"], out["k2"] = k1, k2
        out["k0_lower"] = min(k1, k2)
    return out


@dataclass
class SandwichReport:
    precondition_ok: bool
    failed_preconditions: list
    checks: dict
    passed: bool


def _lower_g_admissible(n, d):
    if d == 0:
        return True
    if n >= 2:
        return d >= 0
    return d > 1


def verify_weight_sandwich(rho, d, eps, theta, t_samples, k, grid=None, k_lower=None,
                           rel_tol=1e-6, abs_tol=1e-8):
    """Check, on the inner region,

    * ``eps w <= B w <= theta^-1 w`` for ``w = (rho + |x|^2)^(d/2)``;
    * ``G(t) w <= (rho + k t + |x|^2)^(d/2)`` when ``k >= k0``;
    * ``G(t) w >= (rho + k' t + |x|^2)^(d/2)`` for ``k' = k_lower`` (default
      the largest admissible value) when that branch applies.

    Returns a report with per-check maximal violations.
    """
    if not (0 < eps < 1 and 0 < theta < 1):
        raise PreconditionError("eps and theta must lie in (0, 1)")
    if rho <= 0:
        raise PreconditionError("rho must be positive")
    grid = grid or GridSpec(1, 64.0, 1024)
    n = grid.dim
    cst = sandwich_constants(n, d, eps, theta, rho)
    failed = []
    if rho < cst["rho0"] * (1 - 1e-12):
        failed.append(f"rho={rho:g} < rho0=max(rho1,rho2)={cst['rho0']:g}")
    upper_g = d >= 0
    # d = 0 is the constant field, for which both G bounds are identities
    if d > 0 and k < cst["k0"]:
        failed.append(f"k={k:g} < k0=4(n+|d-2|)={cst['k0']:g}")
    if d > 0 and rho < cst["rho_g"] * (1 - 1e-12):
        failed.append(f"rho={rho:g} < 2|(d-2)(n+|d-4|)|={cst['rho_g']:g}")
    r = grid.radius()
    mask = grid.inner_mask()
    w = (rho + r * r) ** (d / 2.0)
    tol = abs_tol + rel_tol * float(np.max(np.abs(w)))
    checks = {}
    bw = apply_multiplier(grid, w, bessel_symbol(grid))
    checks["bessel_lower"] = float(np.max((eps * w - bw)[mask]))
    checks["bessel_upper"] = float(np.max((bw - w / theta)[mask]))
    lower_ok = _lower_g_admissible(n, d)
    kl = cst["k0_lower"] if k_lower is None else k_lower
    if lower_ok and kl > cst["k0_lower"] * (1 + 1e-12):
        failed.append(f"k_lower={kl:g} > min(k1,k2)={cst['k0_lower']:g}")
    for t in t_samples:
        gw = apply_multiplier(grid, w, green_symbol(grid, t))
        tt = abs_tol + rel_tol * float(np.max(np.abs(gw)))
        if upper_g:
            up = (rho + k * t + r * r) ** (d / 2.0)
            checks[f"green_upper[t={t:g}]"] = float(np.max((gw - up)[mask]))
        if lower_ok:
            lo = (rho + kl * t + r * r) ** (d / 2.0)
            checks[f"green_lower[t={t:g}]"] = float(np.max((lo - gw)[mask]))
        tol = max(tol, tt)
    ok = not failed and all(v <= tol for v in checks.values())
    return SandwichReport(not failed, failed, checks, ok)
