import math

import numpy as np
import pytest
from scipy import special

from pseudopara import KernelQuery, PreconditionError, bessel_kernel_eval, kernel_lower_bound_check, multiplier
from pseudopara.kernel import bessel_kernel, bessel_kernel_quadrature, kernel_table, phi0

# frozen from a 30-digit mpmath evaluation of the K_alpha closed form,
# cross-checked against heat-kernel subordination quadrature
FROZEN = [
    (1, 1.0, 0.0, 0.5),
    (1, 1.0, 2.0, 0.067667641618306346),
    (2, 1.0, 0.5, 0.1471258646743019),
    (2, 1.0, 3.0, 0.0055289638436389221),
    (3, 1.0, 1.0, 0.02927491576215958),
    (1, 2.0, 1.5, 0.13945635009276864),
    (2, 2.0, 0.0, 0.079577471545947668),
    (3, 0.5, 2.0, 0.0035428441742073453),
]


@pytest.mark.parametrize("n,nu,r,expected", FROZEN)
def test_frozen_values(n, nu, r, expected):
    assert bessel_kernel_eval(KernelQuery(n, nu, r)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n,nu,r,expected", [v for v in FROZEN if v[2] > 0 or v[1] > v[0] / 2])
def test_quadrature_oracle_matches(n, nu, r, expected):
    assert bessel_kernel_quadrature(n, nu, r) == pytest.approx(expected, rel=1e-9)


def test_three_dim_closed_form():
    r = np.linspace(0.1, 15, 40)
    assert np.allclose(bessel_kernel(3, 1.0, r), np.exp(-r) / (4 * math.pi * r), rtol=1e-13)


def test_n2_tail_ratio_tends_to_constant():
    r = np.array([20.0, 40.0, 80.0, 160.0])
    ratio = bessel_kernel(2, 1.0, r) / (r ** -0.5 * np.exp(-r))
    # K_0(r) ~ sqrt(pi/2r) e^-r, so the ratio tends to (2 pi)^-1 sqrt(pi/2)
    limit = math.sqrt(math.pi / 2) / (2 * math.pi)
    assert np.all(np.diff(np.abs(ratio - limit)) < 0)
    assert ratio[-1] == pytest.approx(limit, rel=2e-3)


def test_matches_scipy_kve_across_orders():
    r = np.geomspace(1e-3, 50, 60)
    for n in (1, 2, 3):
        for nu in (0.3, 1.0, 1.7, 2.5):
            ref = ((2 * math.pi) ** (-n / 2) * 2 ** (1 - nu) / math.gamma(nu)
                   * r ** (nu - n / 2) * special.kv(n / 2 - nu, r))
            assert np.allclose(bessel_kernel(n, nu, r), ref, rtol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_radially_decreasing_and_positive(n):
    r = np.linspace(0.05, 25, 300)
    b = bessel_kernel(n, 1.0, r)
    assert np.all(b > 0)
    assert np.all(np.diff(b) < 0)


def test_rejects_bad_queries():
    with pytest.raises(PreconditionError):
        KernelQuery(2, 1.0, 0.0) and bessel_kernel_eval(KernelQuery(2, 1.0, 0.0))
    with pytest.raises(PreconditionError):
        KernelQuery(1, 0.0, 1.0)
    with pytest.raises(PreconditionError):
        KernelQuery(1, -1.0, 1.0)
    with pytest.raises(PreconditionError):
        KernelQuery(4, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        bessel_kernel_eval(KernelQuery(3, 1.0, 0.0))


def test_lower_bound_n1():
    r = np.linspace(0.1, 20, 200)
    b0, ok = kernel_lower_bound_check(1, r)
    assert ok and b0 == pytest.approx(0.5, rel=1e-12)


def test_lower_bound_n2_small_radii_use_log_profile():
    r = np.linspace(0.01, 0.99, 100)
    assert np.allclose(phi0(2, r), 1 - np.log(r))
    b0, ok = kernel_lower_bound_check(2, r)
    assert ok and b0 > 0


def test_lower_bound_single_sample():
    assert kernel_lower_bound_check(3, [1.0])[1]


def test_lower_bound_rejects_bad_samples():
    for bad in ([], [0.0, 1.0], [-1.0], [np.inf]):
        with pytest.raises(PreconditionError):
            kernel_lower_bound_check(1, bad)


def test_multiplier_examples():
    assert multiplier("bessel", 0.0) == 1.0
    assert multiplier("green", 1.0, t=1.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert np.all(multiplier("green", np.linspace(0, 100, 11), t=0.0) == 1.0)
    assert multiplier("bessel", 2.0, k_visc=3.0) == pytest.approx(1 / 7)


def test_green_is_exp_of_bessel_for_unit_viscosity():
    xs = np.linspace(0, 50, 101)
    for t in (0.3, 2.0):
        assert np.allclose(multiplier("green", xs, t=t),
                           np.exp(-t) * np.exp(t * multiplier("bessel", xs)), rtol=1e-14)


def test_multiplier_rejects():
    with pytest.raises(PreconditionError):
        multiplier("green", 1.0, t=-1.0)
    with pytest.raises(PreconditionError):
        multiplier("green", 1.0, t=1.0, k_visc=0.0)
    with pytest.raises(PreconditionError):
        multiplier("bessel", -1.0)
    with pytest.raises(PreconditionError):
        multiplier("heat", 1.0)


def test_kernel_table_columns():
    tab = kernel_table(1, 1.0, 0.5, 5.0, 10)
    assert tab.shape == (10, 4)
    assert np.allclose(tab[:, 1], 0.5 * np.exp(-tab[:, 0]))
    assert np.all(tab[:, 3] >= 1 - 1e-12)
