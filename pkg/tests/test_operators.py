import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from splitlab.errors import BoundaryError, EvaluationError
from splitlab.grid import Field, field_from_fn, make_grid
from splitlab.operators import (
    BoundaryTrace,
    Discretization,
    VelocityField,
    apply_laplacian,
    apply_upwind_convection,
    full_rhs,
    inflow_boundary,
)
from splitlab.scenarios import builtin_scenario

from oracles import laplacian_1d, laplacian_2d, upwind_1d


def _trace(grid, fn):
    return BoundaryTrace(grid, lambda t, *xyz: fn(*xyz)).at(0.0)


@pytest.mark.parametrize("n", [10, 100, 400])
def test_laplacian_exact_on_quadratic_1d(n):
    g = make_grid(1, n)
    q = lambda x: 3 * x**2 - 2 * x + 0.5
    out = apply_laplacian(field_from_fn(g, q), _trace(g, q), 0.1)
    np.testing.assert_allclose(out.values, 0.1 * 6.0, rtol=1e-10)


@pytest.mark.parametrize("n", [10, 100])
def test_laplacian_exact_on_quadratic_2d(n):
    g = make_grid(2, (n, n + 3))
    q = lambda x, y: x**2 + 2 * y**2 - x * y + y
    out = apply_laplacian(field_from_fn(g, q), _trace(g, q), 0.3)
    np.testing.assert_allclose(out.values, 0.3 * 6.0, rtol=1e-10)


@pytest.mark.parametrize("n", [10, 100, 400])
@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_upwind_exact_on_affine_1d(n, sign):
    g = make_grid(1, n)
    a = VelocityField(lambda x: sign * (0.5 + x**2))
    p = lambda x: 4 * x - 1
    bc = _trace(g, p)
    out = apply_upwind_convection(field_from_fn(g, p), a, bc)
    x = g.axis_coords(0)
    np.testing.assert_allclose(out.values, 4 * sign * (0.5 + x**2), rtol=1e-10)


@pytest.mark.parametrize("n", [10, 100])
def test_upwind_exact_on_affine_2d(n):
    g = make_grid(2, n)
    a = VelocityField(lambda x, y: x**2, lambda x, y: y**2)
    p = lambda x, y: 2 * x - 3 * y + 1
    out = apply_upwind_convection(field_from_fn(g, p), a, _trace(g, p))
    x, y = g.mesh()
    np.testing.assert_allclose(out.values, 2 * x**2 - 3 * y**2, rtol=1e-10)


def test_matches_dense_matrices_1d():
    n, d = 7, 0.1
    g = make_grid(1, n)
    L, l0, l1 = laplacian_1d(n, d)
    x = g.axis_coords(0)
    C, c0, c1 = upwind_1d(n, x**2 - 0.2)
    rng = np.random.default_rng(3)
    u = rng.standard_normal(n)
    b0, b1 = 0.7, -1.3
    disc = Discretization(g, d, VelocityField(lambda x: x**2 - 0.2))
    bv = {(0, 0): np.array([b0]), (0, 1): np.array([b1])}
    np.testing.assert_allclose(disc.laplacian(u, bv), L @ u + l0 * b0 + l1 * b1, rtol=1e-13)
    np.testing.assert_allclose(disc.convection(u, bv), C @ u + c0 * b0 + c1 * b1,
                               rtol=1e-13, atol=1e-13)


def test_matches_dense_laplacian_2d():
    g = make_grid(2, (4, 3))
    u = np.random.default_rng(0).standard_normal(g.size)
    disc = Discretization(g, 0.25)
    np.testing.assert_allclose(disc.laplacian(u), laplacian_2d(4, 3, 0.25) @ u, rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(arrays(float, 12, elements=st.floats(-1e3, 1e3)),
       arrays(float, 12, elements=st.floats(-1e3, 1e3)),
       st.floats(-10, 10))
def test_operators_linear_with_zero_data(u, v, c):
    g = make_grid(1, 12)
    disc = Discretization(g, 0.1, VelocityField(lambda x: x**2))
    for op in (disc.laplacian, disc.convection):
        lhs = op(u + c * v)
        rhs = op(u) + c * op(v)
        scale = 1 + np.max(np.abs(op(u))) + abs(c) * np.max(np.abs(op(v)))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


def test_inflow_boundary_1d():
    g = make_grid(1, 20)
    assert inflow_boundary(VelocityField(lambda x: x**2), g) == {(1.0,)}
    assert inflow_boundary(VelocityField(lambda x: -1.0 + 0 * x), g) == {(0.0,)}
    assert inflow_boundary(VelocityField.zero(1), g) == frozenset()


def test_inflow_boundary_2d_includes_corners():
    g = make_grid(2, 3)
    gamma = inflow_boundary(VelocityField(lambda x, y: x**2, lambda x, y: y**2), g)
    assert (1.0, 0.0) in gamma and (1.0, 1.0) in gamma and (0.5, 1.0) in gamma
    assert (0.0, 0.5) not in gamma and (0.5, 0.0) not in gamma
    # x = 0 face has a . n = 0; corner (0, 1) enters through the y = 1 face
    assert (0.0, 1.0) in gamma and (0.0, 0.0) not in gamma


def test_upwind_never_reads_outflow_boundary():
    g = make_grid(1, 9)
    disc = Discretization(g, 0.1, VelocityField(lambda x: x**2))
    u = np.linspace(0, 1, 9)
    # the x = 0 value must not matter
    a = disc.convection(u, {(0, 0): np.array([1e6]), (0, 1): np.array([2.0])})
    b = disc.convection(u, {(0, 0): np.array([-5.0]), (0, 1): np.array([2.0])})
    assert np.array_equal(a, b)


def test_boundary_error_when_stencil_leaves_inflow():
    g = make_grid(1, 9)
    # positive inside but zero at x = 1: the forward stencil reads a non-inflow node
    with pytest.raises(BoundaryError) as info:
        apply_upwind_convection(field_from_fn(g, lambda x: x), VelocityField(lambda x: 1 - x),
                                {(0, 1): np.array([1.0])})
    assert info.value.node == (1.0,)


def test_missing_boundary_value():
    g = make_grid(1, 5)
    with pytest.raises(BoundaryError):
        apply_laplacian(field_from_fn(g, lambda x: x), {(0, 0): np.array([0.0])}, 1.0)


def test_boundary_rate_fallback_matches_analytic():
    g = make_grid(1, 4)
    b = lambda t, x: (1 - x) * np.sin(5 * t) + x * np.cos(3 * t)
    db = lambda t, x: (1 - x) * 5 * np.cos(5 * t) - x * 3 * np.sin(3 * t)
    fd = BoundaryTrace(g, b).rate(0.4)
    exact = BoundaryTrace(g, b, rate=db).rate(0.4)
    for face in fd:
        np.testing.assert_allclose(fd[face], exact[face], atol=1e-8)


def test_full_rhs_vanishes_on_ex1_steady_combination():
    s = builtin_scenario("ex1")
    # at u = exact(t) the semidiscrete residual is the spatial truncation error
    u = field_from_fn(s.grid, lambda x: s.exact(0.3, x))
    r = full_rhs(0.3, u, s).values - u.values  # u_t = u for the exact solution
    assert np.max(np.abs(r)) < 0.05


def test_full_rhs_reports_nonfinite_reaction():
    s = builtin_scenario("ex2d")
    u = Field(s.grid, np.full(s.grid.size, 800.0))
    with pytest.raises(EvaluationError):
        full_rhs(0.0, u, s)
