import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from difflab import exact
from difflab.domain import (
    DensityError,
    EdgeDecayWarning,
    Field,
    Geometry,
    Grid1D,
    check_edge_decay,
    clip_negative,
    inner,
    lp_norm,
    mass,
    sample,
)
from difflab.kernels import gaussian_kernel

GRID = Grid1D.centered(8.0, 64)
values = arrays(np.float64, 64, elements=st.floats(-1e3, 1e3, allow_nan=False))
scalars = st.floats(-1e3, 1e3, allow_nan=False)


# -- oracles -----------------------------------------------------------------

def test_zero_field_has_zero_mass():
    assert mass(sample(GRID, lambda x: 0.0 * x)) == 0.0


def test_gaussian_mass_is_one():
    g = Grid1D(-40.0, 80.0, 8000, Geometry.TRUNCATED_LINE)
    assert abs(mass(sample(g, lambda x: gaussian_kernel(x, 1.0))) - 1.0) < 1e-8


def test_barenblatt_mass_matches_parameter():
    g = Grid1D(-5.0, 10.0, 4000, Geometry.TRUNCATED_LINE)
    for M in (0.5, 1.0, 3.0):
        f = sample(g, lambda x: exact.pme_barenblatt(x, 1.0, 2.0, M=M))
        assert mass(f) == pytest.approx(M, rel=1e-5)


def test_lp_norm_examples():
    g = Grid1D(-1.0, 2.0, 64)
    assert lp_norm(sample(g, lambda x: 1.0 + 0 * x), 1) == pytest.approx(2.0, rel=1e-14)
    g = Grid1D.centered(40.0, 4096)
    assert lp_norm(sample(g, lambda x: exact.cauchy_kernel(x, 1.0)), math.inf) == pytest.approx(1 / math.pi, rel=1e-14)


@given(values)
def test_linf_norm_is_max_abs(v):
    assert lp_norm(Field(GRID, v), math.inf) == np.max(np.abs(v))


def test_sample_matches_direct_evaluation():
    f = sample(GRID, lambda x: gaussian_kernel(x, 0.7))
    np.testing.assert_array_equal(f.values, gaussian_kernel(GRID.x, 0.7))


def test_sampled_barenblatt_edge():
    g = Grid1D(-4.0, 8.0, 8192, Geometry.TRUNCATED_LINE)
    f = sample(g, lambda x: exact.pme_barenblatt(x, 1.0, 2.0))
    r = math.sqrt(exact.pme_constant(2.0) / exact.pme_k(2.0))
    inside = g.x[f.values > 0]
    assert abs(inside.max() - r) <= g.dx and abs(inside.min() + r) <= g.dx


# -- validation --------------------------------------------------------------

@pytest.mark.parametrize("args", [(0.0, -1.0, 64), (0.0, 1.0, 4), (0.0, 1.0, 100), (math.inf, 1.0, 64)])
def test_bad_grids_rejected(args):
    with pytest.raises(ValueError):
        Grid1D(*args)


def test_non_periodic_grids_allow_any_count():
    assert Grid1D(0.0, 1.0, 100, Geometry.DIRICHLET_EXTERIOR).n == 100


def test_field_is_immutable_and_validated():
    f = Field(GRID, np.ones(64))
    with pytest.raises(ValueError):
        f.values[0] = 2.0
    with pytest.raises(ValueError):
        Field(GRID, np.ones(63))
    with pytest.raises(ValueError):
        Field(GRID, np.full(64, np.nan))
    with pytest.raises(ValueError):
        Field(GRID, np.ones(64), time=-1.0)


def test_cell_centres_for_dirichlet_exterior():
    g = Grid1D(-1.0, 2.0, 4 * 8, Geometry.DIRICHLET_EXTERIOR)
    assert g.x[0] == pytest.approx(-1.0 + g.dx / 2)
    assert g.x[-1] == pytest.approx(1.0 - g.dx / 2)


def test_clip_negative_policy():
    v, removed = clip_negative(np.array([1.0, -1e-14, 0.5]))
    assert v.min() == 0.0 and removed == pytest.approx(1e-14)
    with pytest.raises(DensityError):
        clip_negative(np.array([1.0, -1e-6, 0.5]))


def test_edge_decay_warning():
    g = Grid1D(-1.0, 2.0, 64, Geometry.TRUNCATED_LINE)
    with pytest.warns(EdgeDecayWarning):
        assert not check_edge_decay(sample(g, lambda x: 1.0 + 0 * x))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_edge_decay(sample(g, lambda x: np.exp(-100 * x**2)))


# -- properties --------------------------------------------------------------

@given(values, values, scalars, scalars)
def test_mass_is_linear(u, v, a, b):
    f, g = Field(GRID, u), Field(GRID, v)
    lhs = mass(a * f + b * g)
    rhs = a * mass(f) + b * mass(g)
    scale = GRID.dx * (abs(a) * np.abs(u).sum() + abs(b) * np.abs(v).sum()) + 1.0
    assert abs(lhs - rhs) <= 1e-12 * scale


@given(values, values, st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf]))
def test_triangle_inequality(u, v, p):
    f, g = Field(GRID, u), Field(GRID, v)
    assert lp_norm(f + g, p) <= (lp_norm(f, p) + lp_norm(g, p)) * (1 + 1e-12) + 1e-300


@given(values, values)
def test_inner_is_symmetric(u, v):
    f, g = Field(GRID, u), Field(GRID, v)
    assert inner(f, g) == inner(g, f)


@given(st.floats(-3.0, 3.0).filter(lambda a: abs(a) > 0.05))
def test_refinement_changes_mass_at_second_order(a):
    # exp(a x) does not decay at the ends, so the trapezoid error is exactly O(dx^2)
    errs = []
    for n in (64, 128):
        g = Grid1D(0.0, 1.0, n, Geometry.TRUNCATED_LINE)
        lo, hi = g.x[0], g.x[-1]
        errs.append(abs(mass(sample(g, lambda x: np.exp(a * x))) - (math.exp(a * hi) - math.exp(a * lo)) / a))
    assert 3.6 < errs[0] / errs[1] < 4.4
