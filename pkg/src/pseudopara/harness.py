"""Experiment descriptions, runs, comparisons and exponent fits."""
import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError, PreconditionError
from .operators import Field, GridSpec, WeightParams
from .oracles import classification_solution
from .potentials import (PotentialSpec, classify_regime, convexity_certificate,
                         critical_exponents, lambda_star_at, radial_cutoff)
from .solver import (RAW, SolverConfig, Trajectory, maximal_solution, mild_residuals,
                     s_mild_residuals, solve)

CSV_COLUMNS = ("t", "sup_norm", "weighted_norm", "mild_residual", "s_mild_residual")
INITIAL_KINDS = ("zero", "constant", "bump", "power_growth")


@dataclass
class ExperimentSpec:
    name: str
    grid: GridSpec
    potential: PotentialSpec
    solver: SolverConfig
    weight: WeightParams
    initial: dict
    t_end: float
    fit_window: Optional[tuple] = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = self.initial.get("kind")
        if kind not in INITIAL_KINDS:
            raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}, got {kind!r}")
        for key in ("c", "amplitude", "l"):
            if key in self.initial:
                _nonneg(self.initial[key], key)
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.fit_window is None:
            self.fit_window = (self.t_end / 10.0, self.t_end)
        lo, hi = self.fit_window
        if not 0 < lo < hi <= self.t_end * (1 + 1e-12):
            raise ConfigError("fit_window must lie in (0, t_end]")

    def initial_field(self):
        g, ini = self.grid, self.initial
        r = g.radius()
        kind = ini["kind"]
        if kind == "zero":
            return g.zeros()
        if kind == "constant":
            return g.constant(_nonneg(ini.get("c", 1.0), "c"))
        if kind == "bump":
            amp = _nonneg(ini.get("amplitude", 1.0), "amplitude")
            width = float(ini.get("width", 1.0))
            if width <= 0:
                raise ConfigError("bump width must be positive")
            return Field(g, amp * np.exp(-(r / width) ** 2))
        l = _nonneg(ini.get("l", 1.0), "l")
        a = float(ini.get("a", self.weight.a))
        # growing data is cut off near the boundary like the potential
        return Field(g, l * (1.0 + r * r) ** (a / 2.0) * radial_cutoff(r, g.L))

    def data_exponent(self):
        """Spatial growth exponent of the initial data (0 for bounded data)."""
        if self.initial["kind"] == "power_growth":
            return float(self.initial.get("a", self.weight.a))
        return 0.0


def _nonneg(v, name):
    v = float(v)
    if v < 0:
        raise ConfigError(f"{name} must be nonnegative")
    return v


def _ladder(vals):
    out = []
    for v in vals:
        if isinstance(v, str) and v.lower() in ("inf", "infinity", "raw"):
            out.append(RAW)
        else:
            out.append(float(v))
    return tuple(out)


def spec_from_dict(d):
    if not isinstance(d, dict):
        raise ConfigError("experiment must be a mapping")
    known = {"name", "grid", "potential", "solver", "weight", "initial", "t_end",
             "fit_window", "seed", "checks"}
    bad = set(d) - known
    if bad:
        raise ConfigError(f"unknown experiment keys: {sorted(bad)}")
    try:
        grid = GridSpec(**d.get("grid", {"dim": 1, "L": 16.0, "N": 64}))
        weight = WeightParams(**d.get("weight", {}))
        pot = PotentialSpec.from_dict(d.get("potential", {}))
        sv = dict(d.get("solver", {}))
        if "m_ladder" in sv:
            sv["m_ladder"] = _ladder(sv["m_ladder"])
        solver = SolverConfig(weight=weight, **sv)
        fw = d.get("fit_window")
        return ExperimentSpec(
            name=str(d.get("name", "experiment")), grid=grid, potential=pot, solver=solver,
            weight=weight, initial=dict(d.get("initial", {"kind": "zero"})),
            t_end=float(d["t_end"]), fit_window=tuple(map(float, fw)) if fw else None,
            seed=int(d.get("seed", 0)), extra=dict(d.get("checks", {})))
    except KeyError as exc:
        raise ConfigError(f"missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_specs(path):
    """All experiments in a YAML file (one per document)."""
    try:
        with open(path) as fh:
            docs = [doc for doc in yaml.safe_load_all(fh) if doc is not None]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not docs:
        raise ConfigError(f"{path} holds no experiments")
    return docs


def diagnostics_rows(traj: Trajectory, V, cfg):
    mr = mild_residuals(traj, V, cfg)
    sr = s_mild_residuals(traj, V, cfg)
    return [(float(t), float(a), float(b), float(c), float(e))
            for t, a, b, c, e in zip(traj.times, traj.sup_norm, traj.weighted_norm, mr, sr)]


def format_csv(rows, columns=CSV_COLUMNS):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["%.17g" % v for v in row])
    return buf.getvalue()


def write_csv(path, rows, columns=CSV_COLUMNS, force=False):
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path} exists; pass force to overwrite")
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(rows, columns))


def read_csv(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        data = np.array([[float(v) for v in row] for row in rd])
    return {name: data[:, i] for i, name in enumerate(header)}


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    trajectory: Trajectory
    rows: list


def run_experiment(spec: ExperimentSpec, out=None, force=False):
    """Run ``solve`` for one experiment and collect the per-step diagnostics."""
    if out is not None and os.path.exists(out) and not force:
        raise FileExistsError(f"{out} exists; pass force to overwrite")
    traj = solve(spec.initial_field(), spec.potential, spec.solver, spec.t_end)
    rows = diagnostics_rows(traj, spec.potential, spec.solver)
    if out is not None:
        write_csv(out, rows, force=force)
    return ExperimentResult(spec, traj, rows)


@dataclass
class OrderingReport:
    max_violation: float
    violations: np.ndarray
    tolerance: np.ndarray
    passed: bool
    hi: Trajectory = None
    lo: Trajectory = None


def compare_fields(u0: Field, v0: Field, V, cfg, t_end, m_ladder=(RAW,), rel=1e-3, abs_=1e-6):
    """Solve from ordered data ``u0 >= v0`` and check ``u >= v - tol`` inside."""
    if u0.grid != v0.grid:
        raise PreconditionError("both runs must share the grid")
    if np.any(u0.values < v0.values):
        raise PreconditionError("initial data are not ordered (u0 >= v0 fails)")
    if not np.any(u0.values > 0):
        raise PreconditionError("u0 must not vanish identically")
    hi = solve(u0, V, cfg, t_end, m_ladder)
    lo = solve(v0, V, cfg, t_end, m_ladder)
    mask = u0.grid.inner_mask()
    viol = np.array([float(np.max((b - a)[mask])) for a, b in zip(hi.states, lo.states)])
    tol = abs_ + rel * np.maximum(hi.sup_norm, lo.sup_norm)
    return OrderingReport(float(max(viol.max(), 0.0)), viol, tol, bool(np.all(viol <= tol)), hi, lo)


def compare_runs(spec_hi: ExperimentSpec, spec_lo: ExperimentSpec, **kw):
    for attr in ("grid", "potential", "solver", "weight"):
        if getattr(spec_hi, attr) != getattr(spec_lo, attr):
            raise PreconditionError(f"specs differ in {attr}; only the initial data may differ")
    if spec_hi.t_end != spec_lo.t_end:
        raise PreconditionError("specs differ in t_end")
    return compare_fields(spec_hi.initial_field(), spec_lo.initial_field(),
                          spec_hi.potential, spec_hi.solver, spec_hi.t_end,
                          spec_hi.solver.m_ladder, **kw)


@dataclass
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    predicted_slope: float
    regime: str

    def within(self, rel):
        return abs(self.slope - self.predicted_slope) <= rel * abs(self.predicted_slope)

    def within_critical(self, eps_fit=0.15):
        p = self.predicted_slope
        return p - 0.05 * p <= self.slope <= p + eps_fit


def predicted_growth(a, sigma, time_power, p, zero_potential=False):
    """Exponent of t in the norm growth and the regime label.

    Source-dominated growth gives ``a_c/2`` and data-dominated growth
    ``a/2``; a vanishing potential is purely data driven.
    """
    if zero_potential:
        return a / 2.0, "supercritical"
    _, ac = critical_exponents(sigma, time_power, p)
    regime = classify_regime(a, sigma, time_power, p)
    return max(a, ac) / 2.0, regime


def fit_growth_exponent(data, fit_window, a=0.0, sigma=0.0, time_power=0.0, p=0.5,
                        column="weighted_norm", zero_potential=False, min_samples=10):
    """Least-squares slope of ``log column`` against ``log t`` on the window.

    ``data`` is a Trajectory, a CSV path, or a mapping of columns.
    """
    if isinstance(data, Trajectory):
        t = data.times
        y = data.weighted_norm if column == "weighted_norm" else data.sup_norm
    else:
        cols = read_csv(data) if isinstance(data, (str, os.PathLike)) else data
        t, y = np.asarray(cols["t"]), np.asarray(cols[column])
    lo, hi = fit_window
    sel = (t >= lo) & (t <= hi) & (t > 0) & (y > 0)
    if sel.sum() < min_samples:
        raise PreconditionError(f"fit window [{lo}, {hi}] holds {int(sel.sum())} samples, "
                                f"need {min_samples}")
    lx, ly = np.log(t[sel]), np.log(y[sel])
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    ss_res = float(np.sum((ly - (slope * lx + icpt)) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    pred, regime = predicted_growth(a, sigma, time_power, p, zero_potential)
    return FitResult(float(slope), float(icpt), float(min(max(r2, 0.0), 1.0)), pred, regime)


def fit_experiment(res: ExperimentResult, column=None):
    s = res.spec
    a = s.data_exponent()
    col = column or ("weighted_norm" if a > 0 else "sup_norm")
    return fit_growth_exponent(res.trajectory, s.fit_window, a=a, sigma=s.potential.sigma,
                               time_power=s.potential.time_power, p=s.solver.p, column=col,
                               zero_potential=s.potential.is_zero)


@dataclass
class Candidate:
    kappa: float
    trajectory: Trajectory
    mild_residual: float
    s_mild_residual: float
    final_sup: float


def _time_only_constant(V):
    return V.time_only and V.time_power == 0 and V.log_exp == 0 and not callable(V.zeta) \
        and not isinstance(V.zeta, tuple)


def nonuniqueness_demo(V: PotentialSpec, p, kappas, t_end=2.0, dt=1e-3, grid=None,
                       cfg=None, alpha_taus=None):
    """Delayed maximal solutions for each ``kappa``; all start from zero.

    Time-only V uses the closed form. Otherwise the maximal solution of the
    shifted potential is computed numerically, which for genuinely
    time-dependent V needs the convexity certificate.
    """
    cfg = cfg or SolverConfig(p=p, dt=dt)
    grid = grid or GridSpec(1, 8.0, 16)
    n = int(round(t_end / cfg.dt))
    times = np.arange(n + 1) * cfg.dt
    out = []
    if V.time_only:
        table = np.concatenate([[0.0], lambda_star_at(V, times[1:])])
        lam_star = lambda s: float(np.interp(s, times, table))
        for kappa in kappas:
            vals = [classification_solution(t, kappa, p, lambda_star=lam_star) for t in times]
            states = [np.full(grid.shape, v) for v in vals]
            sup = np.array(vals)
            traj = Trajectory(grid, times, states, sup, sup.copy(), 0.0,
                              np.ones(grid.shape), RAW)
            out.append(_candidate(kappa, traj, V, cfg))
        return out
    if not _time_only_constant(PotentialSpec(nu=V.nu, k_exp=V.k_exp, log_exp=V.log_exp,
                                             zeta=V.zeta)):
        taus = alpha_taus if alpha_taus is not None else np.geomspace(1e-4, 1.0, 9)
        _, ok = convexity_certificate(V, taus, np.linspace(0.0, t_end, 201))
        if not ok:
            raise PreconditionError("V(x, t) lacks the convexity certificate "
                                    "V(x, t + tau) >= alpha(tau) V(x, t); refusing")
    for kappa in kappas:
        j0 = int(round(kappa / cfg.dt))
        if abs(j0 * cfg.dt - kappa) > 1e-9:
            raise PreconditionError("kappa must lie on the time mesh")
        base = maximal_solution(V.shifted(kappa), cfg, max(t_end - kappa, cfg.dt), grid)
        zero = np.zeros(grid.shape)
        states = [zero] * (j0 + 1) + base.states[1:n - j0 + 1]
        traj = Trajectory(grid, times, states,
                          np.array([float(np.max(s)) for s in states]),
                          np.array([float(np.max(s)) for s in states]),
                          base.min_before_clamp, base.profile, RAW)
        out.append(_candidate(kappa, traj, V, cfg))
    return out


def _candidate(kappa, traj, V, cfg):
    mr = mild_residuals(traj, V, cfg)
    sr = s_mild_residuals(traj, V, cfg)
    return Candidate(kappa, traj, float(mr.max()), float(sr.max()),
                     float(np.max(traj.states[-1])))


def pairwise_min_gap(cands):
    gaps = [float(np.max(np.abs(a.trajectory.states[-1] - b.trajectory.states[-1])))
            for i, a in enumerate(cands) for b in cands[i + 1:]]
    return min(gaps) if gaps else math.inf
