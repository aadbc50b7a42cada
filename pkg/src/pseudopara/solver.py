"""Exponential time stepping for

    d/dt (u - k Lap u) = Lap u + V(x, t) u^p,    0 < p < 1,

on a periodic grid. In Fourier variables ``u_t = -lam u + b h`` with
``b = 1/(1 + k xi^2)``, ``lam = xi^2 b`` and ``h = V u^p``, so the linear part
``E(t) = exp(-t lam)`` (the Green operator G(t)) is applied exactly and only
the Duhamel source integral is approximated.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._backend import core
from .errors import ConfigError, PreconditionError, SolverOverflowError
from .operators import Field, GridSpec, WeightParams
from .potentials import PotentialSpec, contraction_slab_length, radial_cutoff, upsilon

INTEGRATORS = ("euler_exp", "midpoint_exp", "picard_trap")


@dataclass(frozen=True)
class SolverConfig:
    p: float = 0.5
    k_visc: float = 1.0
    dt: float = 1e-3
    slab_T: Optional[float] = None
    picard_tol: float = 1e-12
    picard_max_iters: int = 100
    m_ladder: tuple = (4, 16, 64, 256)
    integrator: str = "midpoint_exp"
    weight: WeightParams = WeightParams()
    theta: float = 0.5
    ceiling: float = 1e12
    store_every: int = 1
    cutoff: Optional[bool] = None
    ladder_tol: float = 1e-8

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ConfigError(f"p must lie in (0, 1), got {self.p}")
        if self.k_visc <= 0:
            raise ConfigError("k_visc must be positive")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.slab_T is not None and self.slab_T < self.dt:
            raise ConfigError("slab_T must be at least dt")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}")
        ladder = tuple(float(m) for m in self.m_ladder)
        if not ladder or any(m <= 0 for m in ladder) or any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigError("m_ladder must be a nonempty increasing positive sequence")
        object.__setattr__(self, "m_ladder", ladder)
        if self.store_every < 1:
            raise ConfigError("store_every must be a positive integer")

    def use_cutoff(self, V):
        if self.cutoff is not None:
            return self.cutoff
        return V.sigma > 0 or self.weight.a > 0

    def replace(self, **kw):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return SolverConfig(**d)


RAW = math.inf


@dataclass(frozen=True)
class RegularizedSource:
    """``F_m``: slope ``m^(2(1-p))`` below ``m^-2``, ``s^p`` above, odd below 0.
    ``m = inf`` is the raw power."""
    m: float
    p: float

    @property
    def lipschitz(self):
        return math.inf if math.isinf(self.m) else self.m ** (2.0 * (1.0 - self.p))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        if math.isinf(self.m):
            f = a ** self.p
        else:
            f = np.where(a >= self.m ** -2.0, a ** self.p, self.lipschitz * a)
        return np.sign(s) * f


def _core_m(m):
    return 0.0 if math.isinf(m) else float(m)


@dataclass
class Trajectory:
    grid: GridSpec
    times: np.ndarray
    states: list
    sup_norm: np.ndarray
    weighted_norm: np.ndarray
    min_before_clamp: float
    profile: np.ndarray
    m: float = RAW
    ladder_report: Optional[dict] = None
    extras: dict = field(default_factory=dict)

    def field(self, i):
        return Field(self.grid, self.states[i])

    def index_of(self, t, tol=1e-9):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise PreconditionError(f"t={t} is not on the stored time mesh")
        return i

    @property
    def stored_dt(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


def potential_profile(grid, V, cfg):
    """Spatial factor of V on the grid, including the cutoff when enabled."""
    r = grid.radius()
    if V.sigma < 0:
        raise PreconditionError("negative sigma is singular at x = 0")
    prof = np.array(V.spatial(r), dtype=float)
    if cfg.use_cutoff(V):
        prof *= radial_cutoff(r, grid.L)
    return prof


class _Stepper:
    def __init__(self, grid, V, cfg, profile=None):
        self.grid, self.V, self.cfg = grid, V, cfg
        xs = grid.xi_sq()
        self.b = 1.0 / (1.0 + cfg.k_visc * xs)
        self.lam = xs * self.b
        self.E = np.exp(-cfg.dt * self.lam)
        self.Eh = np.exp(-0.5 * cfg.dt * self.lam)
        self.profile = potential_profile(grid, V, cfg) if profile is None else profile
        self.axes = tuple(range(grid.dim))
        self.zero_source = V.is_zero or not np.any(self.profile)
        self.lowest = 0.0

    def fft(self, u):
        return np.fft.rfftn(u, axes=self.axes)

    def ifft(self, uh):
        return np.fft.irfftn(uh, s=self.grid.shape, axes=self.axes)

    def source_hat(self, u, t, m):
        """``b * FFT(V(., t) F_m(u))``."""
        scale = float(self.V.time_factor(t))
        h = core.source_term(u, self.profile, scale, self.cfg.p, _core_m(m))
        return self.b * self.fft(h)

    def clamp(self, u):
        low = core.clamp_nonneg(u)
        if low < self.lowest:
            self.lowest = low
        return u

    def step(self, u, t, m):
        dt = self.cfg.dt
        uh = self.fft(u)
        if self.zero_source:
            return self.clamp(self.ifft(self.E * uh))
        if self.cfg.integrator == "euler_exp":
            new = self.E * (uh + dt * self.source_hat(u, t, m))
        else:
            g0 = self.source_hat(u, t, m)
            half = self.clamp(self.ifft(self.Eh * (uh + 0.5 * dt * g0)))
            new = self.E * uh + dt * self.Eh * self.source_hat(half, t + 0.5 * dt, m)
        return self.clamp(self.ifft(new))

    def picard_slab(self, u0, t0, nsteps, m):
        """Fixed point of the exponential trapezoid rule on one slab."""
        dt, cfg = self.cfg.dt, self.cfg
        W = [u0.copy() for _ in range(nsteps + 1)]
        it = 0
        for it in range(1, cfg.picard_max_iters + 1):
            g = [self.source_hat(w, t0 + j * dt, m) for j, w in enumerate(W)]
            new = [u0.copy()]
            wh = self.fft(u0)
            for j in range(nsteps):
                wh = self.E * wh + 0.5 * dt * (self.E * g[j] + g[j + 1])
                new.append(self.clamp(self.ifft(wh)))
            delta = max(float(np.max(np.abs(a - b))) for a, b in zip(new, W))
            W = new
            if delta <= cfg.picard_tol * max(1.0, float(np.max(np.abs(W[-1])))):
                break
        else:
            warnings.warn(f"Picard slab at t={t0:g} stopped after {it} iterations "
                          f"(change {delta:.3g})", RuntimeWarning, stacklevel=3)
        return W, it


def step(u: Field, t, cfg: SolverConfig, V: PotentialSpec, source=RAW) -> Field:
    """One Duhamel step over ``[t, t + dt]``. ``source`` is ``'raw'`` or a level ``m``."""
    if t < 0:
        raise PreconditionError("t must be nonnegative")
    if np.any(u.values < 0):
        raise PreconditionError("u must be nonnegative")
    m = RAW if source in ("raw", None) else float(source)
    st = _Stepper(u.grid, V, cfg.replace(integrator="midpoint_exp")
                  if cfg.integrator == "picard_trap" else cfg)
    out = st.step(np.array(u.values), t, m)
    _guard(out, cfg, t + cfg.dt)
    return Field(u.grid, out)


def _guard(u, cfg, t):
    s = float(np.max(np.abs(u)))
    if not math.isfinite(s) or s > cfg.ceiling:
        raise SolverOverflowError(f"sup-norm {s:.3g} exceeded ceiling {cfg.ceiling:.3g} at t={t:g}")


def integrate(u0, V, cfg, t_end, m=RAW, profile=None):
    """Integrate a single level from ``u0`` (array or Field) to ``t_end``."""
    grid = u0.grid
    vals = np.array(u0.values, dtype=float)
    if np.any(vals < 0):
        raise PreconditionError("initial data must be nonnegative")
    nsteps = int(round(t_end / cfg.dt))
    if nsteps < 0 or abs(nsteps * cfg.dt - t_end) > 1e-9 * max(1.0, t_end):
        raise PreconditionError("t_end must be a nonnegative multiple of dt")
    st = _Stepper(grid, V, cfg, profile)
    mask = grid.inner_mask()
    wgt = cfg.weight.weight(grid.radius())
    times, states, sups, wn = [], [], [], []

    def record(t, u):
        times.append(t)
        states.append(u.copy())
        sups.append(float(np.max(np.abs(u[mask]))))
        wn.append(core.weighted_sup(u, wgt, mask))

    u = vals
    record(0.0, u)
    extras = {}
    if cfg.integrator == "picard_trap":
        lip = RegularizedSource(m, cfg.p).lipschitz
        slab = cfg.slab_T
        if slab is None:
            ups = upsilon(V, max(t_end, cfg.dt), cfg.theta,
                          grid.L * math.sqrt(grid.dim))
            slab = contraction_slab_length(ups, lip, cfg.theta) if math.isfinite(lip) else 10 * cfg.dt
            slab = max(slab, cfg.dt)
        per = max(1, int(slab / cfg.dt))
        extras["slab_T"] = per * cfg.dt
        iters = []
        j = 0
        while j < nsteps:
            k = min(per, nsteps - j)
            W, it = st.picard_slab(u, j * cfg.dt, k, m)
            iters.append(it)
            for i in range(1, k + 1):
                if (j + i) % cfg.store_every == 0:
                    record((j + i) * cfg.dt, W[i])
            u = W[-1]
            j += k
            _guard(u, cfg, j * cfg.dt)
        extras["picard_iters"] = iters
    else:
        for j in range(nsteps):
            u = st.step(u, j * cfg.dt, m)
            if (j + 1) % cfg.store_every == 0:
                _guard(u, cfg, (j + 1) * cfg.dt)
                record((j + 1) * cfg.dt, u)
        _guard(u, cfg, t_end)
    return Trajectory(grid, np.array(times), states, np.array(sups), np.array(wn),
                      st.lowest, st.profile, m, None, extras)


def lift(grid, cfg, V, m):
    """``(1/m) (R^2 + |x|^2)^(a/2)``, cut off at the boundary when needed."""
    if math.isinf(m):
        return np.zeros(grid.shape)
    g = cfg.weight.growth(grid.radius())
    if cfg.weight.a > 0:
        g = g * radial_cutoff(grid.radius(), grid.L)
    return g / m


def ladder_monotonicity(trajs, tol):
    """Worst increase from one level to the next, per stored time (inner region)."""
    mask = trajs[0].grid.inner_mask()
    worst = np.zeros(len(trajs[0].times))
    for lo, hi in zip(trajs, trajs[1:]):
        for i, (a, b) in enumerate(zip(lo.states, hi.states)):
            worst[i] = max(worst[i], float(np.max((b - a)[mask])))
    return {"levels": [t.m for t in trajs], "max_increase": worst,
            "monotone": bool(np.all(worst <= tol))}


def solve(u0: Field, V: PotentialSpec, cfg: SolverConfig, t_end, m_ladder=None):
    """Run the regularisation ladder and return the last level.

    ``m_ladder = (inf,)`` runs the raw power directly.
    """
    ladder = cfg.m_ladder if m_ladder is None else tuple(float(m) for m in m_ladder)
    if np.any(u0.values < 0):
        raise PreconditionError("initial data must be nonnegative")
    prof = potential_profile(u0.grid, V, cfg)
    trajs = []
    for m in ladder:
        data = Field(u0.grid, u0.values + lift(u0.grid, cfg, V, m))
        trajs.append(integrate(data, V, cfg, t_end, m, prof))
    out = trajs[-1]
    if len(trajs) > 1:
        tol = cfg.ladder_tol + 1e-6 * max(float(np.max(t.sup_norm)) for t in trajs)
        rep = ladder_monotonicity(trajs, tol)
        if not rep["monotone"]:
            warnings.warn(f"ladder not monotone in m: max increase {rep['max_increase'].max():.3g}",
                          RuntimeWarning, stacklevel=2)
        out.ladder_report = rep
    return out


def _neville_zero(hs, ys):
    """Value at ``h = 0`` of the interpolating polynomial through ``(hs, ys)``."""
    p = [np.array(y, dtype=float) for y in ys]
    n = len(hs)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (hs[i + k] * p[i] - hs[i] * p[i + 1]) / (hs[i + k] - hs[i])
    return p[0]


def maximal_solution(V: PotentialSpec, cfg: SolverConfig, t_end, grid=None,
                     extrapolate="richardson"):
    """Limit of the solutions with constant data ``1/m``.

    The level solutions decrease to the maximal solution. Near ``h = 0``
    they are smooth in ``h = m^-(1-p)`` (for constant V exactly a
    polynomial), so the default extrapolates to ``h = 0``; ``'last'``
    returns the finest level, which is an upper bound.
    """
    if extrapolate not in ("richardson", "last"):
        raise ConfigError("extrapolate must be 'richardson' or 'last'")
    grid = grid or GridSpec(1, 16.0, 32)
    prof = potential_profile(grid, V, cfg)
    trajs = []
    for m in cfg.m_ladder:
        data = Field(grid, np.full(grid.shape, 1.0 / m))
        trajs.append(integrate(data, V, cfg, t_end, RAW, prof))
    tol = cfg.ladder_tol + 1e-6 * max(float(np.max(t.sup_norm)) for t in trajs)
    rep = ladder_monotonicity(trajs, tol) if len(trajs) > 1 else {"monotone": True}
    if not rep["monotone"]:
        warnings.warn("maximal-solution ladder not monotone in m", RuntimeWarning, stacklevel=2)
    last = trajs[-1]
    if extrapolate == "last" or len(trajs) == 1:
        states = [s.copy() for s in last.states]
    else:
        hs = [m ** -(1.0 - cfg.p) for m in cfg.m_ladder]
        states = [np.maximum(_neville_zero(hs, [t.states[i] for t in trajs]), 0.0)
                  for i in range(len(last.times))]
    mask = grid.inner_mask()
    wgt = cfg.weight.weight(grid.radius())
    out = Trajectory(grid, last.times.copy(), states,
                     np.array([float(np.max(np.abs(s[mask]))) for s in states]),
                     np.array([core.weighted_sup(s, wgt, mask) for s in states]),
                     min(t.min_before_clamp for t in trajs), prof, RAW, rep,
                     {"levels": trajs})
    return out


def _ops(traj, cfg):
    g = traj.grid
    xs = g.xi_sq()
    b = 1.0 / (1.0 + cfg.k_visc * xs)
    return g, b, xs * b, tuple(range(g.dim))


def _source_hats(traj, V, cfg, b, axes):
    out = []
    for t, u in zip(traj.times, traj.states):
        h = core.source_term(u, traj.profile, float(V.time_factor(t)), cfg.p, 0.0)
        out.append(b * np.fft.rfftn(h, axes=axes))
    return out


def _duhamel_integrals(g, Delta, E1):
    """``I_j = int_0^{t_j} E(t_j - s) g(s) ds`` on a uniform mesh by
    exponentially weighted Simpson steps (quadratic start for odd j)."""
    n = len(g)
    I = [np.zeros_like(g[0])]
    if n == 1:
        return I
    if n == 2:
        I.append(0.5 * Delta * (E1 * g[0] + g[1]))
        return I
    E2 = E1 * E1
    I.append(Delta * (5.0 * E1 * g[0] + 8.0 * g[1] - g[2] / E1) / 12.0)
    for j in range(2, n):
        I.append(E2 * I[j - 2] + Delta / 3.0 * (E2 * g[j - 2] + 4.0 * E1 * g[j - 1] + g[j]))
    return I


def _plain_integrals(g, Delta):
    n = len(g)
    I = [np.zeros_like(g[0])]
    if n == 1:
        return I
    if n == 2:
        I.append(0.5 * Delta * (g[0] + g[1]))
        return I
    I.append(Delta * (5.0 * g[0] + 8.0 * g[1] - g[2]) / 12.0)
    for j in range(2, n):
        I.append(I[j - 2] + Delta / 3.0 * (g[j - 2] + 4.0 * g[j - 1] + g[j]))
    return I


def _check_uniform(traj):
    t = traj.times
    if len(t) > 2 and np.max(np.abs(np.diff(t) - (t[1] - t[0]))) > 1e-9 * max(1.0, t[-1]):
        raise PreconditionError("residuals need a uniform stored time mesh")


def mild_residuals(traj: Trajectory, V, cfg):
    """Inner-region ``sup |u(t_j) - (M u)(t_j)|`` for every stored time,
    where ``M u = G(t) u0 + int_0^t G(t - s) B(V u^p)(s) ds`` (raw power)."""
    _check_uniform(traj)
    grid, b, lam, axes = _ops(traj, cfg)
    Delta = traj.stored_dt
    E1 = np.exp(-Delta * lam)
    g = _source_hats(traj, V, cfg, b, axes)
    I = _duhamel_integrals(g, Delta, E1)
    u0h = np.fft.rfftn(traj.states[0], axes=axes)
    mask = grid.inner_mask()
    res = np.empty(len(traj.times))
    for j, t in enumerate(traj.times):
        Mu = np.fft.irfftn(np.exp(-t * lam) * u0h + I[j], s=grid.shape, axes=axes)
        res[j] = float(np.max(np.abs(traj.states[j] - Mu)[mask]))
    return res


def mild_residual(traj, V, cfg, t_index):
    if not -len(traj.times) <= t_index < len(traj.times):
        raise PreconditionError("t_index out of range")
    sub = _truncate(traj, t_index % len(traj.times))
    return float(mild_residuals(sub, V, cfg)[-1])


def _truncate(traj, j):
    return Trajectory(traj.grid, traj.times[:j + 1], traj.states[:j + 1], traj.sup_norm[:j + 1],
                      traj.weighted_norm[:j + 1], traj.min_before_clamp, traj.profile, traj.m)


def s_mild_residuals(traj: Trajectory, V, cfg):
    """Residual of ``mu = exp(t/k) u`` against
    ``mu0 + int_0^t B(mu/k + exp(s/k) V u^p) ds`` (inner-region sup, mu scale)."""
    _check_uniform(traj)
    grid, b, lam, axes = _ops(traj, cfg)
    k = cfg.k_visc
    Delta = traj.stored_dt
    g = []
    for t, u in zip(traj.times, traj.states):
        h = core.source_term(u, traj.profile, float(V.time_factor(t)), cfg.p, 0.0)
        e = math.exp(t / k)
        g.append(b * np.fft.rfftn(e * (u / k + h), axes=axes))
    I = _plain_integrals(g, Delta)
    mu0h = np.fft.rfftn(traj.states[0], axes=axes)
    mask = grid.inner_mask()
    res = np.empty(len(traj.times))
    for j, t in enumerate(traj.times):
        Ms = np.fft.irfftn(mu0h + I[j], s=grid.shape, axes=axes)
        res[j] = float(np.max(np.abs(math.exp(t / k) * traj.states[j] - Ms)[mask]))
    return res


def s_mild_residual(traj, V, cfg, t_index):
    if not -len(traj.times) <= t_index < len(traj.times):
        raise PreconditionError("t_index out of range")
    sub = _truncate(traj, t_index % len(traj.times))
    return float(s_mild_residuals(sub, V, cfg)[-1])


def restart_check(traj: Trajectory, V, cfg, tau):
    """Re-solve from ``u(tau)`` with ``V(., . + tau)`` and return the
    inner-region sup deviation from the stored tail."""
    i0 = traj.index_of(tau)
    if i0 == len(traj.times) - 1:
        return 0.0
    start = traj.field(i0)
    sub = integrate(start, V.shifted(tau), cfg, traj.times[-1] - tau, traj.m, traj.profile)
    mask = traj.grid.inner_mask()
    dev = 0.0
    for j, s in enumerate(sub.states):
        dev = max(dev, float(np.max(np.abs(s - traj.states[i0 + j])[mask])))
    return dev


def write_state(path, f: Field, t):
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(f"dim={g.dim} N={g.N} L={g.L!r} t={t!r}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_state(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        meta = dict(item.split("=", 1) for item in header)
        raw = fh.read()
    try:
        grid = GridSpec(int(meta["dim"]), float(meta["L"]), int(meta["N"]))
        t = float(meta["t"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad state header: {header}") from exc
    vals = np.frombuffer(raw, dtype="<f8").astype(float).reshape(grid.shape)
    return Field(grid, vals), t
