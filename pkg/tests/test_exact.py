import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import beta as beta_fn

from difflab import exact
from difflab.domain import Geometry, Grid1D, mass, sample
from difflab.nonlocal_ops import inverse_riesz, rfl_matrix


# -- porous medium -----------------------------------------------------------

def test_pme_exponent_examples():
    assert exact.pme_exponents(2.0) == pytest.approx((1 / 3, 1 / 3))
    assert exact.pme_exponents(3.0) == pytest.approx((1 / 4, 1 / 4))
    assert exact.pme_exponents(1 + 1e-9, 1) == pytest.approx((0.5, 0.5), abs=1e-8)
    assert exact.pme_exponents(2.0, 3) == pytest.approx((3 / 5, 1 / 5))
    with pytest.raises(ValueError):
        exact.pme_exponents(1.0)


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0, 5.0])
def test_pme_constant_against_beta_function(m):
    # int (C - k x^2)_+^p dx = C^(p + 1/2) k^(-1/2) B(1/2, p + 1)
    p, k = 1 / (m - 1), exact.pme_k(m)
    for M in (1.0, 2.5):
        ref = (M * math.sqrt(k) / beta_fn(0.5, p + 1)) ** (1 / (p + 0.5))
        assert exact.pme_constant(m, 1, M) == pytest.approx(ref, rel=1e-10)


def test_pme_support_and_pressure_laplacian():
    m, t = 2.0, 3.0
    r = exact.pme_support_radius(t, m)
    assert exact.pme_barenblatt(r * (1 - 1e-9), t, m) > 0
    assert exact.pme_barenblatt(r * (1 + 1e-9), t, m) == 0
    x = np.linspace(-0.8 * r, 0.8 * r, 41)
    h = 1e-3
    v = lambda y: exact.pme_pressure(exact.pme_barenblatt(y, t, m), m)
    lap = (v(x + h) - 2 * v(x) + v(x - h)) / h**2
    np.testing.assert_allclose(lap, -exact.pme_exponents(m)[1] / t, rtol=1e-6)


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("lam", [2.0, 10.0])
def test_pme_scaling_invariance(m, lam):
    a, b = exact.pme_exponents(m)
    x = np.linspace(-3, 3, 61)
    lhs = exact.pme_barenblatt(x, 1.7, m)
    rhs = lam**a * exact.pme_barenblatt(lam**b * x, lam * 1.7, m)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-14)


def test_mass_conserving_families_on_grid():
    times = (1.0, 2.0, 5.0)
    g = Grid1D(-10.0, 20.0, 400000, Geometry.TRUNCATED_LINE)  # the sqrt edge of the PMFP profile costs dx^1.5
    g_fat = Grid1D(-4000.0, 8000.0, 400000, Geometry.TRUNCATED_LINE)
    for fam, grid in ((lambda x, t: exact.pme_barenblatt(x, t, 2.0), g),
                      (lambda x, t: exact.pmfp_profile(x, t, 0.5), g),
                      (lambda x, t: exact.fde_barenblatt(x, t, 0.5), g_fat)):
        masses = [mass(sample(grid, lambda x: fam(x, t))) for t in times]
        assert max(masses) - min(masses) <= 1e-6
        assert masses[0] == pytest.approx(1.0, abs=1e-6)


# -- fast diffusion ----------------------------------------------------------

@given(st.integers(1, 5), st.floats(1e-6, 1.0 - 1e-6))
def test_fde_beta_above_half(N, frac):
    mc = exact.critical_exponent(N)
    m = mc + frac * (1 - mc)
    if m <= mc or m >= 1:
        return
    assert exact.fde_exponents(m, N)[1] > 0.5


def test_critical_exponents():
    assert exact.critical_exponent(1) == -1.0
    assert exact.critical_exponent(3) == pytest.approx(1 / 3)
    assert exact.critical_exponent(1, 0.75) == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        exact.fde_exponents(-1.5, 1)


@pytest.mark.parametrize("m", [0.3, 0.5, 0.8])
def test_fde_constant_and_tail(m):
    q, k = 1 / (1 - m), exact.fde_k(m)
    ref = (math.sqrt(k) / beta_fn(0.5, q - 0.5)) ** (1 / (0.5 - q))
    assert exact.fde_constant(m) == pytest.approx(ref, rel=1e-10)
    x = np.geomspace(1e3, 1e4, 20)
    slope = np.polyfit(np.log(x), np.log(exact.fde_barenblatt(x, 1.0, m)), 1)[0]
    assert slope == pytest.approx(-2 / (1 - m), rel=0.02)


def test_fde_m0_is_cauchy_in_rescaled_variable():
    c, k = exact.fde_constant(0.0), exact.fde_k(0.0)
    xi = np.linspace(-30, 30, 121)
    y = xi * math.sqrt(k / c)
    prof = exact.fde_barenblatt(xi, 1.0, 0.0)
    np.testing.assert_allclose(prof, exact.cauchy_kernel(y, 1.0) * math.sqrt(k / c), rtol=1e-10)


# -- log-diffusion -----------------------------------------------------------

def test_logdiff_mass_and_extinction():
    a, T = 0.7, 2.0
    for t in (0.0, 0.5, 1.9):
        planar, _ = quad(lambda r: 2 * math.pi * r * exact.logdiff_extinction(r, t, a, T), 0, math.inf)
        assert planar == pytest.approx(8 * math.pi * (T - t), rel=1e-8)
    assert np.max(exact.logdiff_extinction(np.linspace(0, 5, 11), T - 1e-12, a, T)) < 1e-10
    with pytest.raises(ValueError):
        exact.logdiff_extinction(0.0, T, a, T)


def test_logdiff_radial_equation():
    a, T, t = 1.3, 2.0, 0.4
    r = np.linspace(0.2, 3.0, 15)
    h = 1e-3
    u = lambda rr, tt: exact.logdiff_extinction(rr, tt, a, T)
    lg = lambda rr: np.log(u(rr, t))
    lap = (lg(r + h) - 2 * lg(r) + lg(r - h)) / h**2 + (lg(r + h) - lg(r - h)) / (2 * h * r)
    ut = (u(r, t + h) - u(r, t - h)) / (2 * h)
    np.testing.assert_allclose(ut, lap, rtol=1e-5)


# -- fractional families -----------------------------------------------------

def test_pmfp_exponents():
    assert exact.pmfp_exponents(0.5) == pytest.approx((0.5, 0.5))
    assert exact.pmfp_exponents(1e-9) == pytest.approx((1 / 3, 1 / 3), abs=1e-8)
    assert exact.fhe_spec(0.5).alpha == 1.0


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_pmfp_profile_compact_with_unit_mass(s):
    r = exact.pmfp_support_radius(1.0, s)
    assert exact.pmfp_profile(r * 1.0001, 1.0, s) == 0 and exact.pmfp_profile(r * 0.999, 1.0, s) > 0
    val, _ = quad(lambda x: exact.pmfp_profile(x, 1.0, s), -r, r)
    assert val == pytest.approx(1.0, rel=1e-9)


def test_torsion_constant_classical_and_numerical():
    assert exact.frac_torsion_constant(1.0) == pytest.approx(2.0)
    # (-Delta)^sigma (1 - x^2)_+^sigma is constant on (-1, 1): check with the RFL matrix
    sigma = 0.5
    g = Grid1D(-1.0, 2.0, 2000, Geometry.DIRICHLET_EXTERIOR)
    w = np.maximum(1 - g.x**2, 0) ** sigma
    got = rfl_matrix(g, sigma) @ w
    mid = np.abs(g.x) < 0.5
    np.testing.assert_allclose(got[mid], exact.frac_torsion_constant(sigma), rtol=5e-3)


def test_pmfp_pressure_is_parabolic_on_support():
    s = 0.5
    g = Grid1D.centered(400.0, 1 << 16)
    u = sample(g, lambda x: exact.pmfp_profile(x, 1.0, s))
    v = u.with_values(u.values - u.values.mean())
    p = inverse_riesz(v, s).values
    sup = np.abs(g.x) < 0.8 * exact.pmfp_support_radius(1.0, s)
    coef = np.polyfit(g.x[sup], p[sup], 2)[0]
    assert coef == pytest.approx(-exact.pmfp_exponents(s)[1] / 2, rel=2e-3)


# -- KPP waves ---------------------------------------------------------------

def test_kpp_minimal_speed():
    assert exact.kpp_wave(2.0).c_star == 2.0
    with pytest.raises(exact.NoMonotoneWave):
        exact.kpp_wave(1.9)


@pytest.mark.parametrize("c", [2.0, 2.5, 4.0])
def test_kpp_wave_shape_and_residual(c):
    w = exact.kpp_wave(c)
    x = np.linspace(-30, 30, 3001)
    phi = w(x)
    assert np.all(np.diff(phi) > 0) and phi.min() > 0 and phi.max() < 1
    assert w(0.0)[0] == pytest.approx(0.5, abs=1e-12)
    xm = np.linspace(w.x_lo + 1, w.x_hi - 1, 400)
    h = 1e-3
    d = w.derivative
    d2 = (-d(xm + 2 * h) + 8 * d(xm + h) - 8 * d(xm - h) + d(xm - 2 * h)) / (12 * h)
    res = -d2 + c * d(xm) - exact.logistic(w(xm))
    assert np.max(np.abs(res)) < 1e-8


# -- separable profiles ------------------------------------------------------

@settings(deadline=None, max_examples=10)
@given(st.sampled_from([1.5, 2.0, 3.0]), st.sampled_from([0.3, 0.5, 0.8]))
def test_separable_profile_equation(m, s):
    g = Grid1D(-1.0, 2.0, 64, Geometry.DIRICHLET_EXTERIOR)
    a = rfl_matrix(g, s)
    S = exact.separable_profile(a, m)
    assert S.min() > 0
    np.testing.assert_allclose(a @ S**m, S / (m - 1), rtol=1e-9, atol=1e-12)
