import math

import numpy as np
import pytest

from pseudopara import (Field, GridSpec, PreconditionError, WeightParams, apply_bessel, apply_green,
                        in_jn, in_jn_plus, verify_operator_bounds, verify_weight_sandwich,
                        weighted_norm)
from pseudopara.operators import (contraction_rhs, default_tol, random_band_limited,
                                  sandwich_constants)


def test_grid_validation():
    for bad in [(3, 1.0, 8), (1, 0.0, 8), (1, 1.0, 7), (1, 1.0, 0)]:
        with pytest.raises(PreconditionError):
            GridSpec(*bad)
    with pytest.raises(PreconditionError):
        GridSpec(1, 4.0, 8, inner_radius=4.0)
    g = GridSpec(1, 4.0, 8)
    assert g.inner_radius == 2.0 and g.dx == 1.0
    assert g.axis()[0] == -4.0 and g.axis()[-1] == 3.0


def test_dual_frequencies(grid1):
    xs = grid1.xi_sq()
    j = np.arange(grid1.N // 2 + 1)
    assert np.allclose(xs, (math.pi * j / grid1.L) ** 2)


def test_field_is_immutable_and_finite(grid1):
    f = grid1.constant(2.0)
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(PreconditionError):
        Field(grid1, np.full(grid1.shape, np.nan))
    with pytest.raises(PreconditionError):
        Field(grid1, np.zeros(3))
    assert f.nonneg


@pytest.mark.parametrize("dim", [1, 2])
def test_constants_preserved(dim):
    g = GridSpec(dim, 10.0, 32)
    one = g.constant(1.0)
    assert np.max(np.abs(apply_bessel(one).values - 1)) < 1e-14
    assert np.max(np.abs(apply_green(one, 5.0).values - 1)) < 1e-14


def test_green_identity_at_zero(grid1, rng):
    f = random_band_limited(grid1, rng)
    assert apply_green(f, 0.0).values is f.values


def test_cosine_is_eigenfunction(grid2):
    x, y = grid2.coords()
    xi = 3 * math.pi / grid2.L
    f = Field(grid2, np.cos(xi * x) * np.cos(xi * y))
    out = apply_bessel(f).values
    assert np.allclose(out, f.values / (1 + 2 * xi * xi), atol=1e-14)
    out = apply_green(f, 0.7, k_visc=2.0).values
    lam = 2 * xi * xi / (1 + 2 * 2 * xi * xi)
    assert np.allclose(out, f.values * math.exp(-0.7 * lam), atol=1e-14)


@pytest.mark.parametrize("n,d", [(1, 0.0), (1, 1.0), (1, 2.0), (2, 0.5), (2, 2.0)])
def test_bessel_of_power_dominates_inside(n, d):
    g = GridSpec(n, 32.0, 256 if n == 1 else 128)
    f = Field(g, g.radius() ** d)
    bf = apply_bessel(f).values
    mask = g.inner_mask()
    assert np.all((bf - f.values)[mask] >= -default_tol(f) * 10)


def test_green_lower_bound_on_bump(grid1):
    f = Field(grid1, np.exp(-grid1.radius() ** 2))
    g = apply_green(f, 1.0).values
    assert np.all(g >= math.exp(-1) * f.values - default_tol(f))


def test_green_rejects_negative_time(grid1):
    with pytest.raises(PreconditionError):
        apply_green(grid1.constant(1.0), -1.0)
    with pytest.raises(PreconditionError):
        apply_green(grid1.constant(1.0), 1.0, k_visc=-1.0)


def test_weighted_norm_examples(grid1):
    w = WeightParams(2.0, 3.0)
    assert weighted_norm(Field(grid1, w.growth(grid1.radius())), w) == pytest.approx(1.0)
    assert weighted_norm(grid1.zeros(), w) == 0.0
    assert weighted_norm(grid1.constant(5.0), w) == pytest.approx(5.0 / 2.0 ** 3)


def test_weighted_norm_mask(grid1):
    w = WeightParams(1.0, 0.0)
    vals = np.zeros(grid1.shape)
    vals[0] = 7.0  # corner node outside the inner region
    assert weighted_norm(Field(grid1, vals), w) == 7.0
    assert weighted_norm(Field(grid1, vals), w, masked=True) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_jn_case_table(n):
    ds = np.linspace(-4, 4, 161)
    for d in ds:
        if n == 1:
            expect = d <= 0 or d >= 1
        elif n == 2:
            expect = True
        else:
            expect = d <= -1 or d >= 0
        assert in_jn(d, n) == expect
        assert in_jn_plus(d, n) == (expect and d >= 0)


def test_contraction_condition_branches():
    assert contraction_rhs(1, 2.0) == 2.0
    assert contraction_rhs(1, 4.0) == 4.0 * 3.0
    assert contraction_rhs(2, -1.0) == 2.0
    assert contraction_rhs(2, -3.0) == 3.0 * 1.0
    assert WeightParams(2.0, 2.0).contraction_ok(1, 0.5)
    assert not WeightParams(1.0, 2.0).contraction_ok(1, 0.5)


def test_operator_bounds_unweighted():
    rep = verify_operator_bounds(WeightParams(1.0, 0.0), 0.9, 10, GridSpec(1, 16.0, 64))
    assert rep.passed and rep.max_ratio_bessel <= 1 / 0.9


def test_operator_bounds_negative_weight():
    rep = verify_operator_bounds(WeightParams(2.0, -1.0), 0.5, 10, GridSpec(1, 32.0, 128))
    assert rep.precondition_ok and rep.passed


def test_operator_bounds_reports_precondition():
    rep = verify_operator_bounds(WeightParams(1.0, 2.0), 0.5, 5)
    assert not rep.precondition_ok and not rep.passed and "required" in rep.message


def test_constant_green_ratio_is_one(grid1):
    w = WeightParams(2.0, 2.0)
    one = grid1.constant(1.0)
    assert weighted_norm(apply_green(one, 3.0), w) / weighted_norm(one, w) == pytest.approx(1.0)


def test_sandwich_trivial_exponent():
    rep = verify_weight_sandwich(1.0, 0.0, 0.5, 0.5, [0.5, 2.0], 8.0, GridSpec(1, 16.0, 64))
    assert rep.passed
    assert all(abs(v) < 1e-12 or v < 0 for v in rep.checks.values())


def test_sandwich_constants_formulas():
    c = sandwich_constants(1, 2.0, 0.5, 0.5, rho=4.0)
    assert (c["rho1"], c["rho2"], c["rho0"], c["k0"]) == (2.0, 4.0, 4.0, 4.0)
    c = sandwich_constants(2, 3.0, 0.5, 0.5, rho=6.0)
    assert c["k0"] == 12.0 and c["rho_g"] == 6.0
    assert c["k1"] == pytest.approx(4 / (1 + 4 / 6))
    assert c["k0_lower"] == min(c["k1"], c["k2"])


def test_sandwich_reports_failed_preconditions():
    rep = verify_weight_sandwich(1.0, 2.0, 0.5, 0.5, [1.0], 1.0, GridSpec(1, 16.0, 64))
    assert not rep.precondition_ok and not rep.passed
    assert any("rho0" in f for f in rep.failed_preconditions)
    assert any("k0" in f for f in rep.failed_preconditions)


def test_random_fields_are_band_limited(grid1, rng):
    f = random_band_limited(grid1, rng).values
    spec = np.abs(np.fft.rfft(f))
    assert np.all(spec[grid1.N // 8:] < 1e-12 * spec.max())
    assert np.max(np.abs(f)) == pytest.approx(1.0)
