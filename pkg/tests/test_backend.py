import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import special

from pseudopara import _core_py
from pseudopara._backend import BACKEND

try:
    from pseudopara import _core
except ImportError:
    _core = None

needs_ext = pytest.mark.skipif(_core is None, reason="compiled extension not built")


def _fields(seed=0, shape=(17, 9)):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=shape)
    u[0, :3] = [0.0, 1e-6, 1 / 16 ** 2]
    return u, rng.random(shape), rng.random(shape) > 0.3


@needs_ext
@pytest.mark.parametrize("p", [0.4, 0.5])
@pytest.mark.parametrize("m", [0.0, 4.0, 16.0])
def test_source_term_agrees(m, p):
    u, prof, _ = _fields()
    a = _core.source_term(u, prof, 1.7, p, m)
    b = _core_py.source_term(u, prof, 1.7, p, m)
    assert a.shape == u.shape
    assert np.allclose(a, b, rtol=1e-15, atol=0)


@needs_ext
def test_clamp_agrees():
    u, _, _ = _fields(1)
    a, b = u.copy(), u.copy()
    assert _core.clamp_nonneg(a) == _core_py.clamp_nonneg(b) == u.min()
    assert np.array_equal(a, b) and a.min() == 0.0
    pos = np.abs(u)
    assert _core.clamp_nonneg(pos.copy()) == 0.0


@needs_ext
def test_clamp_rejects_read_only():
    u = np.ones(4)
    u.setflags(write=False)
    with pytest.raises(ValueError):
        _core.clamp_nonneg(u)


@needs_ext
def test_weighted_sup_agrees():
    u, w, mask = _fields(2)
    assert _core.weighted_sup(u, w, mask) == pytest.approx(_core_py.weighted_sup(u, w, mask),
                                                            rel=1e-15)


@pytest.mark.parametrize("mod", [_core_py, _core] if _core is not None else [_core_py])
@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 1.0, 2.5])
def test_kve_matches_scipy(mod, alpha):
    x = np.geomspace(1e-3, 50.0, 40)
    got = np.asarray(mod.kve(alpha, x))
    assert np.allclose(got, special.kve(alpha, x), rtol=1e-12, atol=0)


def test_env_var_forces_python():
    env = dict(os.environ, PSEUDOPARA_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import pseudopara; print(pseudopara.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_label():
    assert BACKEND == ("cython" if _core is not None and
                       not os.environ.get("PSEUDOPARA_PURE_PYTHON") else "python")
