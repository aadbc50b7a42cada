"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_core.py [--repeat 5] [--n 65536]

The full-solve row runs in a subprocess per backend so the module-level
backend switch is honoured.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from pseudopara import _core_py

try:
    from pseudopara import _core
except ImportError:
    _core = None

SOLVE = """
import time
import numpy as np
from pseudopara import BACKEND, Field, GridSpec, PotentialSpec, SolverConfig, solve
g = GridSpec(2, 16.0, 64)
u0 = Field(g, np.exp(-g.radius() ** 2))
cfg = SolverConfig(dt=1e-2, m_ladder=(4, 16, 64, 256))
t0 = time.perf_counter()
solve(u0, PotentialSpec(sigma=2.0), cfg, 1.0)
print(BACKEND, time.perf_counter() - t0)
"""


def best(stmt, repeat, number):
    return min(timeit.repeat(stmt, repeat=repeat, number=number)) / number


def solve_time(pure):
    env = dict(os.environ)
    env.pop("PSEUDOPARA_PURE_PYTHON", None)
    if pure:
        env["PSEUDOPARA_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", SOLVE], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=1 << 16)
    args = ap.parse_args()
    if _core is None:
        print("compiled extension not built; only the fallback is available")
        mods = {"python": _core_py}
    else:
        mods = {"python": _core_py, "cython": _core}

    rng = np.random.default_rng(0)
    u = rng.random(args.n)
    prof = rng.random(args.n)
    neg = rng.normal(size=args.n)
    mask = rng.random(args.n) > 0.5
    x = np.geomspace(1e-2, 20.0, 256)

    rows = []
    for label, call in [
        ("source_term raw", lambda m: m.source_term(u, prof, 1.3, 0.5, 0.0)),
        ("source_term m=64", lambda m: m.source_term(u, prof, 1.3, 0.5, 64.0)),
        ("clamp_nonneg", lambda m: m.clamp_nonneg(neg.copy())),
        ("weighted_sup", lambda m: m.weighted_sup(neg, prof, mask)),
        ("kve(1/2, 256 pts)", lambda m: m.kve(0.5, x)),
    ]:
        t = {name: best(lambda: call(mod), args.repeat, 20) for name, mod in mods.items()}
        rows.append((label, t))

    print(f"{'kernel':<22}" + "".join(f"{k:>14}" for k in mods) + f"{'speedup':>10}")
    for label, t in rows:
        sp = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{label:<22}" + "".join(f"{t[k] * 1e6:12.1f}us" for k in mods) + f"{sp:10.2f}")

    times = dict(solve_time(pure) for pure in ((True, False) if _core else (True,)))
    line = "  ".join(f"{k} {v:.3f}s" for k, v in times.items())
    print(f"full solve (2d, N=64, 4 levels, 100 steps): {line}")


if __name__ == "__main__":
    main()
