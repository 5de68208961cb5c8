import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpeig import eigen
from jumpeig.errors import InvalidArgument
from jumpeig.model import build_grid, build_jump_measure, build_rate_field

LAM100 = 15.3729982  # mpmath fixed point of the closed-form map, V=1, uniform jumps


def _closed_form_F(lam, gamma):
    k = math.sqrt(2 * (gamma - lam))
    iu = (2 / k) * math.tanh(k / 2)
    return lam + (gamma - lam) * iu / (1 - iu) if lam else gamma * iu / (1 - iu)


def test_weights_uniform_coarse():
    g = build_grid(3)
    w = eigen.quadrature_weights(build_jump_measure("uniform", g), g)
    np.testing.assert_allclose(w, [0.125, 0.25, 0.25, 0.25, 0.125])
    np.testing.assert_allclose(w[1:-1], 0.25)


def test_weights_atom_on_node():
    g = build_grid(3)
    w = eigen.quadrature_weights(build_jump_measure("atom", g, location=0.5), g)
    np.testing.assert_array_equal(w, [0, 0, 1, 0, 0])


def test_weights_atom_between_nodes():
    g = build_grid(3)
    w = eigen.quadrature_weights(build_jump_measure("atom", g, location=0.5 + 0.25 / 4), g)
    np.testing.assert_allclose(w, [0, 0, 0.75, 0.25, 0], atol=1e-15)


def test_residual_at_zero(grid, const_V, uniform_mu):
    g0 = eigen.fixed_point_residual(0.0, 100.0, const_V, uniform_mu, grid)
    assert g0 == pytest.approx(16.4715, abs=0.01)
    assert g0 == pytest.approx(_closed_form_F(0.0, 100.0), rel=1e-5)


def test_residual_vanishes_at_root(grid, const_V, uniform_mu):
    lam = eigen.principal_eigenvalue_fixed_point(100.0, const_V, uniform_mu, grid).lambda0
    assert abs(eigen.fixed_point_residual(lam, 100.0, const_V, uniform_mu, grid)) < 1e-8
    assert abs(eigen.fixed_point_residual(15.373, 100.0, const_V, uniform_mu, grid)) < 0.01


def test_reference_eigenvalue(grid, const_V, uniform_mu):
    res = eigen.principal_eigenvalue_fixed_point(100.0, const_V, uniform_mu, grid)
    assert res.lambda0 == pytest.approx(LAM100, abs=0.02)
    assert 0 < res.lambda0 < res.lambda_star


def test_gamma_zero(grid, const_V, uniform_mu):
    res = eigen.principal_eigenvalue_fixed_point(0.0, const_V, uniform_mu, grid)
    assert res.method == "matrix"
    assert res.lambda0 == pytest.approx(math.pi ** 2 / 2, rel=1e-6)
    assert res.lambda0 == pytest.approx(res.lambda_star, rel=1e-10)


def test_atom_exponentially_small(grid, const_V):
    mu = build_jump_measure("atom", grid, location=0.5)
    lam = eigen.principal_eigenvalue_fixed_point(400.0, const_V, mu, grid).lambda0
    ref = 2 * 400 * math.exp(-math.sqrt(200))
    assert ref / 1.1 < lam < ref * 1.1
    assert lam == pytest.approx(5.77089e-4, rel=1e-3)


def test_atom_matrix_route_real_positive():
    g = build_grid(1999)
    V = build_rate_field("constant", g)
    mu = build_jump_measure("atom", g, location=0.5)
    res = eigen.principal_eigenvalue_matrix(900.0, V, mu, g)
    assert 0 < res.lambda0 < 1e-5
    assert isinstance(res.lambda0, float)


def test_base_eigenvalue_discrete_formula(grid, const_V):
    lam = eigen.base_dirichlet_eigenvalue(0.0, const_V, grid)
    assert lam == pytest.approx(2 / grid.h ** 2 * math.sin(math.pi * grid.h / 2) ** 2, abs=1e-8)
    assert eigen.base_dirichlet_eigenvalue(100.0, const_V, grid) == pytest.approx(100 + lam)


CASES = [(v, m) for v in ("constant", "linear") for m in ("uniform", "poly1", "poly2")]


def _problem(grid, v, m):
    V = build_rate_field(v, grid, slope=0.5) if v == "linear" else build_rate_field(v, grid)
    mu = build_jump_measure("poly", grid, k=int(m[-1])) if m.startswith("poly") \
        else build_jump_measure(m, grid)
    return V, mu


@pytest.mark.parametrize("v,m", CASES)
@pytest.mark.parametrize("gamma", [10.0, 100.0, 1000.0])
def test_route_agreement(grid, v, m, gamma):
    V, mu = _problem(grid, v, m)
    a = eigen.principal_eigenvalue_fixed_point(gamma, V, mu, grid).lambda0
    b = eigen.principal_eigenvalue_matrix(gamma, V, mu, grid).lambda0
    assert abs(a - b) / a <= 1e-6


@pytest.mark.parametrize("gamma", [1.0, 37.0, 500.0])
def test_route_agreement_k3(grid, gamma):
    V = build_rate_field("linear", grid, slope=-0.7)
    mu = build_jump_measure("poly", grid, k=3)
    a = eigen.principal_eigenvalue_fixed_point(gamma, V, mu, grid).lambda0
    b = eigen.principal_eigenvalue_matrix(gamma, V, mu, grid).lambda0
    assert abs(a - b) / a <= 1e-6


def test_degenerate_rate_requires_matrix(grid, uniform_mu):
    V = build_rate_field("degenerate", grid)
    with pytest.raises(InvalidArgument):
        eigen.principal_eigenvalue(100.0, V, uniform_mu, grid, "fixed_point")
    assert eigen.principal_eigenvalue(100.0, V, uniform_mu, grid).method == "matrix"


def test_sublinearity(grid, const_V, uniform_mu):
    r = [eigen.principal_eigenvalue(g, const_V, uniform_mu, grid).lambda0 / g
         for g in (1e2, 1e3, 1e4)]
    assert r[0] > r[1] > r[2] and r[2] < 0.02
    np.testing.assert_allclose(r, [0.154, 0.046, 0.0143], rtol=0.02)


def test_reflection_invariance(grid):
    V = build_rate_field("degenerate", grid)
    mu = build_jump_measure("poly", grid, k=2)
    op = eigen.build_operator(300.0, V, mu, grid)
    a = eigen.principal_eigenvalue_matrix(300.0, V, mu, grid, op=op).lambda0
    b = eigen.principal_eigenvalue_matrix(300.0, V, mu, grid, op=op.reflected()).lambda0
    assert abs(a - b) <= 1e-12 * a


def test_grid_convergence_and_richardson(const_V, uniform_mu):
    g = build_grid(500)
    l1 = eigen.principal_eigenvalue(100.0, const_V.on(g), uniform_mu.on(g), g).lambda0
    l2 = eigen.principal_eigenvalue(100.0, const_V.on(g.refined()), uniform_mu.on(g.refined()),
                                    g.refined()).lambda0
    l3 = eigen.principal_eigenvalue(100.0, const_V.on(g.refined().refined()),
                                    uniform_mu.on(g.refined().refined()),
                                    g.refined().refined()).lambda0
    assert 3.5 < (l1 - l2) / (l2 - l3) < 4.5
    rr = eigen.principal_eigenvalue_richardson(100.0, const_V, uniform_mu, g)
    assert abs(rr.value - LAM100) < abs(l2 - LAM100) / 10


@settings(max_examples=30, deadline=None)
@given(gamma=st.floats(0.5, 3000.0), slope=st.floats(-1.9, 1.9), k=st.integers(0, 3))
def test_positive_residual_at_zero_and_guard(gamma, slope, k):
    g = build_grid(400)
    V = build_rate_field("linear", g, slope=slope)
    mu = build_jump_measure("poly", g, k=k)
    assert eigen.fixed_point_residual(0.0, gamma, V, mu, g) > 0
    res = eigen.principal_eigenvalue(gamma, V, mu, g)
    assert 0 < res.lambda0 < res.lambda_star
