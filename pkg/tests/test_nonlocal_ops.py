import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from difflab.domain import Field, Geometry, Grid1D, inner, sample
from difflab.nonlocal_ops import (
    OperatorKind,
    OperatorSpec,
    apply_operator,
    apply_quadrature,
    apply_semigroup,
    apply_spectral,
    cfl_matrix,
    classical_laplacian_matrix,
    eigs,
    frac_constant,
    frac_constant_exact,
    inverse_riesz,
    quadratic_form,
    rfl_matrix,
    sfl_apply,
    sfl_eigenvalues,
    sfl_matrix,
)

ORDERS = (0.25, 0.5, 0.75)
BOX = Grid1D.centered(2 * math.pi, 256)
INTERVAL = Grid1D(-1.0, 2.0, 200, Geometry.DIRICHLET_EXTERIOR)


def relerr(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


# -- the kernel constant -------------------------------------------------------

@pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.75, 0.9])
def test_calibrated_constant_matches_closed_form(s):
    assert frac_constant(s) == pytest.approx(frac_constant_exact(s), rel=1e-6)


def test_closed_form_constant_against_mpmath():
    s = mpmath.mpf("0.3")
    ref = s * 4**s * mpmath.gamma(0.5 + s) / (mpmath.sqrt(mpmath.pi) * mpmath.gamma(1 - s))
    assert frac_constant_exact(0.3) == pytest.approx(float(ref), rel=1e-14)


# -- periodic operators ----------------------------------------------------------

@pytest.mark.parametrize("s", ORDERS + (1.0,))
def test_spectral_constant_and_plane_wave(s):
    c = sample(BOX, lambda x: 3.0 + 0 * x)
    assert np.max(np.abs(apply_spectral(c, s).values)) < 1e-12
    for k in (1, 3):
        f = sample(BOX, lambda x: np.cos(k * x))
        np.testing.assert_allclose(apply_spectral(f, s).values, k ** (2 * s) * f.values, atol=1e-12)


def test_spectral_s_one_is_minus_laplacian():
    f = sample(BOX, lambda x: np.cos(x))
    np.testing.assert_allclose(apply_spectral(f, 1.0).values, f.values, atol=1e-12)


@pytest.mark.parametrize("s", ORDERS)
def test_quadrature_constant_and_cosine(s):
    c = sample(BOX, lambda x: 1.0 + 0 * x)
    assert np.max(np.abs(apply_quadrature(c, s).values)) < 1e-12
    f = sample(BOX, lambda x: np.cos(x))
    assert np.max(np.abs(apply_quadrature(f, s).values - f.values)) < 1e-4


def _gauss_frac_lap(x, s):
    """(-Delta)^s exp(-x^2) by the 1F1 formula (independent oracle)."""
    c = 4.0**s * math.gamma(0.5 + s) / math.gamma(0.5)
    return np.array([c * float(mpmath.hyp1f1(0.5 + s, 0.5, -xx * xx)) for xx in x])


@pytest.mark.parametrize("s", ORDERS)
def test_quadrature_matches_spectral_on_gaussian(s):
    g = Grid1D.centered(40.0, 4096)
    f = sample(g, lambda x: np.exp(-x * x))
    assert relerr(apply_quadrature(f, s).values, apply_spectral(f, s).values) <= 1e-4


@pytest.mark.parametrize("s", ORDERS)
def test_truncated_line_quadrature_against_hypergeometric_oracle(s):
    g = Grid1D(-12.0, 24.0, 2048, Geometry.TRUNCATED_LINE)
    f = sample(g, lambda x: np.exp(-x * x))
    got = apply_quadrature(f, s).values
    sel = np.abs(g.x) < 4.0
    assert relerr(got[sel], _gauss_frac_lap(g.x[sel], s)) <= 1e-4


@pytest.mark.parametrize("s", ORDERS)
def test_semigroup_matches_spectral(s):
    c = sample(BOX, lambda x: 2.0 + 0 * x)
    assert np.max(np.abs(apply_semigroup(c, s).values)) < 1e-12
    rng = np.random.default_rng(7)
    coef = rng.normal(size=(2, 12))
    f = sample(BOX, lambda x: sum(coef[0, k] * np.cos(k * x) + coef[1, k] * np.sin(k * x) for k in range(12)))
    assert relerr(apply_semigroup(f, s).values, apply_spectral(f, s).values) <= 1e-6


def test_semigroup_cosine_half_order():
    f = sample(BOX, lambda x: np.cos(x))
    assert np.max(np.abs(apply_semigroup(f, 0.5).values - f.values)) <= 1e-6


def test_inverse_riesz_examples():
    for s in ORDERS:
        f = sample(BOX, lambda x: np.cos(x))
        np.testing.assert_allclose(inverse_riesz(f, s).values, f.values, atol=1e-12)
    f = sample(BOX, lambda x: np.cos(2 * x))
    np.testing.assert_allclose(inverse_riesz(f, 0.5).values, f.values / 2, atol=1e-12)
    with pytest.raises(ValueError):
        inverse_riesz(sample(BOX, lambda x: 1.0 + np.cos(x)), 0.5)


@settings(deadline=None, max_examples=30)
@given(arrays(np.float64, 256, elements=st.floats(-1, 1)), st.sampled_from(ORDERS))
def test_spectral_inverts_inverse_riesz(v, s):
    f = Field(BOX, v - v.mean())
    back = apply_spectral(inverse_riesz(f, s), s)
    assert np.max(np.abs(back.values - f.values)) <= 1e-10 * (1 + np.max(np.abs(v)))


@pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
def test_order_validation(s):
    with pytest.raises(ValueError):
        apply_quadrature(sample(BOX, np.cos), s)


# -- bounded domains -------------------------------------------------------------

@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_rfl_below_sfl_and_growth(s):
    rfl = eigs(rfl_matrix(INTERVAL, s), 20, INTERVAL).eigenvalues
    sfl = sfl_eigenvalues(INTERVAL, s, 10)
    assert np.all(rfl[:10] <= sfl)
    j = np.arange(5, 21)
    slope = np.polyfit(np.log(j), np.log(rfl[4:20]), 1)[0]
    assert slope == pytest.approx(2 * s, rel=0.1)


def test_rfl_first_rayleigh_quotient_half_order():
    a = rfl_matrix(INTERVAL, 0.5)
    phi = eigs(a, 1, INTERVAL).eigenfunctions[0]
    assert quadratic_form(a, phi) / inner(phi, phi) <= math.pi / 2


def test_rfl_tends_to_dirichlet_laplacian():
    g = Grid1D(-1.0, 2.0, 400, Geometry.DIRICHLET_EXTERIOR)
    f = np.cos(0.5 * math.pi * g.x)
    errs = []
    for s in (0.9, 0.99, 0.999):
        r = rfl_matrix(g, s) @ f
        errs.append(np.max(np.abs(r - (0.5 * math.pi) ** 2 * f)[50:-50]))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-2


@pytest.mark.parametrize("build", [lambda g: rfl_matrix(g, 0.4), lambda g: cfl_matrix(g, 0.75),
                                   lambda g: cfl_matrix(g, 0.75, dirichlet=True), lambda g: sfl_matrix(g, 0.5),
                                   lambda g: sfl_matrix(g, 0.5, discrete=True)])
def test_matrices_symmetric_positive(build):
    a = build(INTERVAL)
    assert np.array_equal(a, a.T)
    assert np.linalg.eigvalsh(a).min() > -1e-8 * np.abs(a).max()


def test_cfl_constants_and_first_eigenvalue():
    a = cfl_matrix(INTERVAL, 0.75)
    assert np.max(np.abs(a.sum(axis=1))) <= 1e-12 * np.abs(a).max() * INTERVAL.n
    lam_cfl = eigs(cfl_matrix(INTERVAL, 0.75, dirichlet=True), 1, INTERVAL).eigenvalues[0]
    lam_rfl = eigs(rfl_matrix(INTERVAL, 0.75), 1, INTERVAL).eigenvalues[0]
    assert lam_cfl < lam_rfl
    with pytest.raises(ValueError):
        cfl_matrix(INTERVAL, 0.4)
    with pytest.raises(ValueError):
        OperatorSpec(OperatorKind.CFL, 0.5)


def test_sfl_on_zero_pi():
    g = Grid1D(0.0, math.pi, 128, Geometry.DIRICHLET_EXTERIOR)
    phi1, phi2 = sample(g, np.sin), sample(g, lambda x: np.sin(2 * x))
    for s in ORDERS:
        np.testing.assert_allclose(sfl_apply(phi1, s).values, phi1.values, atol=1e-12)
    np.testing.assert_allclose(sfl_apply(phi2, 0.5).values, 2 * phi2.values, atol=1e-12)
    band = sample(g, lambda x: np.sin(x) + 0.3 * np.sin(3 * x))
    np.testing.assert_allclose(sfl_apply(band, 1.0).values, np.sin(g.x) + 2.7 * np.sin(3 * g.x), atol=1e-11)
    dec = eigs(OperatorSpec(OperatorKind.SFL, 0.5), 3, g)
    np.testing.assert_allclose(dec.eigenvalues, [1.0, 2.0, 3.0], rtol=1e-14)


def test_eigs_normalisation():
    dec = eigs(rfl_matrix(INTERVAL, 0.5), 4, INTERVAL)
    gram = dec.vectors.T @ dec.vectors * INTERVAL.dx
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-10)
    assert dec.vectors[:, 0].sum() > 0


# -- properties ------------------------------------------------------------------

vec = arrays(np.float64, INTERVAL.n, elements=st.floats(-1, 1))
ops = st.sampled_from(["rfl", "cfl", "sfl"])


def _bounded(kind):
    return {"rfl": lambda: rfl_matrix(INTERVAL, 0.6), "cfl": lambda: cfl_matrix(INTERVAL, 0.6),
            "sfl": lambda: sfl_matrix(INTERVAL, 0.6)}[kind]()


_CACHE = {k: _bounded(k) for k in ("rfl", "cfl", "sfl")}


@settings(deadline=None, max_examples=40)
@given(vec, vec, ops)
def test_self_adjoint(u, v, kind):
    a = _CACHE[kind]
    f, g = Field(INTERVAL, u), Field(INTERVAL, v)
    lhs, rhs = quadratic_form(a, f, g), quadratic_form(a, g, f)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


@settings(deadline=None, max_examples=40)
@given(vec, ops)
def test_quadratic_form_nonnegative(u, kind):
    f = Field(INTERVAL, u)
    assert quadratic_form(_CACHE[kind], f) >= -1e-9 * np.abs(_CACHE[kind]).max()


@settings(deadline=None, max_examples=30)
@given(arrays(np.float64, 256, elements=st.floats(-1, 1)), st.floats(-5, 5), st.sampled_from(ORDERS))
def test_periodic_operators_linear(v, a, s):
    f = Field(BOX, v)
    for op in (OperatorKind.FRAC_SPECTRAL, OperatorKind.FRAC_QUADRATURE, OperatorKind.FRAC_SEMIGROUP):
        spec = OperatorSpec(op, s)
        lhs = apply_operator(spec, a * f + f).values
        rhs = (a + 1.0) * apply_operator(spec, f).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-9 * (1 + np.max(np.abs(rhs)))


def test_classical_laplacian_periodic_annihilates_constants():
    a = classical_laplacian_matrix(BOX)
    assert np.max(np.abs(a @ np.ones(BOX.n))) < 1e-9
