import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from deposition.characteristics import (DomainClass, PhysState, char_decomposition, char_speeds,
                                        discriminant, domain_classify, flux_jacobian,
                                        genuine_nonlinearity, genuine_nonlinearity_fd,
                                        riemann_gradients, riemann_hessians, riemann_invariants,
                                        riemann_w, riemann_z)
from deposition.errors import NotStrictlyHyperbolic, OutsideDomain

rhos = st.floats(1e-3, 10.0)
us = st.floats(-10.0, 10.0)


# symbolic oracle for the invariants, built independently of the package
R, U = sp.symbols("rho u", real=True)
Q = sp.sqrt(U**2 + 4 * R)
W_SYM = -sp.sqrt(Q - U) * (Q + 2 * U)
Z_SYM = W_SYM.subs(U, -U)
GRAD = sp.lambdify((R, U), [sp.diff(W_SYM, R), sp.diff(W_SYM, U), sp.diff(Z_SYM, R), sp.diff(Z_SYM, U)])
HESS = sp.lambdify((R, U), [sp.diff(W_SYM, R, 2), sp.diff(W_SYM, R, U), sp.diff(W_SYM, U, 2),
                            sp.diff(Z_SYM, R, 2), sp.diff(Z_SYM, R, U), sp.diff(Z_SYM, U, 2)])


def test_decomposition_examples():
    d = char_decomposition(1.0, 0.0)
    assert d.lambda_plus == pytest.approx(1.0) and d.lambda_minus == pytest.approx(-1.0)
    np.testing.assert_allclose(d.right_plus, [1.0, 1.0])
    np.testing.assert_allclose(d.right_minus, [-1.0, 1.0])
    d = char_decomposition(2.0, 1.0)
    assert (d.lambda_plus, d.lambda_minus) == pytest.approx((2.0, -1.0))
    with pytest.raises(NotStrictlyHyperbolic):
        char_decomposition(0.0, 0.0)


@given(rhos, us)
def test_eigen_equations_and_biorthogonality(rho, u):
    d = char_decomposition(rho, u)
    A = flux_jacobian(rho, u)
    scale = 1.0 + abs(rho) + abs(u)
    for lam, left, right in ((d.lambda_plus, d.left_plus, d.right_plus),
                             (d.lambda_minus, d.left_minus, d.right_minus)):
        assert np.max(np.abs(left @ A - lam * left)) < 1e-12 * scale**2
        assert np.max(np.abs(A @ right - lam * right)) < 1e-12 * scale**2
    assert abs(d.left_plus @ d.right_minus) < 1e-12 * scale**2
    assert abs(d.left_minus @ d.right_plus) < 1e-12 * scale**2
    assert d.lambda_minus < d.lambda_plus


def test_speeds_match_numpy_eigvals(rng):
    rho = rng.uniform(0.01, 5, 200)
    u = rng.uniform(-5, 5, 200)
    lam, mu = char_speeds(rho, u)
    ev = np.linalg.eigvals(flux_jacobian(rho, u)).real
    np.testing.assert_allclose(np.sort(ev, axis=1), np.column_stack([mu, lam]), atol=1e-12)


def test_invariant_examples():
    w, z = riemann_invariants(1.0, 0.0)
    assert w == pytest.approx(-2 * math.sqrt(2)) and z == pytest.approx(-2 * math.sqrt(2))
    w, z = riemann_invariants(0.0, 2.0)
    assert w == 0.0 and z == pytest.approx(4.0)
    w, z = riemann_invariants(2.0, 1.0)
    assert w == pytest.approx(-5 * math.sqrt(2)) and z == pytest.approx(-2.0)


@given(rhos, us)
def test_invariants_match_symbolic(rho, u):
    ws = float(W_SYM.subs({R: rho, U: u}).evalf(30))
    zs = float(Z_SYM.subs({R: rho, U: u}).evalf(30))
    w, z = riemann_invariants(rho, u)
    assert w == pytest.approx(ws, rel=1e-10, abs=1e-10)
    assert z == pytest.approx(zs, rel=1e-10, abs=1e-10)


@given(rhos, us)
def test_mirror_relation(rho, u):
    assert riemann_z(rho, u) == riemann_w(rho, -u)


def test_gradient_examples():
    gw, gz = riemann_gradients(1.0, 0.0)
    assert abs(gw @ np.array([-1.0, 1.0])) < 1e-14
    gw, gz = riemann_gradients(2.0, 1.0)
    # parallel to (2, 2) and (-1, 2): vanishing cross products
    assert abs(gw[0] * 2 - gw[1] * 2) < 1e-12
    assert abs(gz[0] * 2 - gz[1] * -1) < 1e-12


def test_gradients_against_fd_and_sympy(rng):
    rho = rng.uniform(0.05, 10, 500)
    u = rng.uniform(-10, 10, 500)
    gw, gz = riemann_gradients(rho, u)
    g = np.array(GRAD(rho, u))
    np.testing.assert_allclose(gw[..., 0], g[0], rtol=1e-10)
    np.testing.assert_allclose(gw[..., 1], g[1], rtol=1e-10)
    np.testing.assert_allclose(gz[..., 0], g[2], rtol=1e-10)
    np.testing.assert_allclose(gz[..., 1], g[3], rtol=1e-10)
    h = 1e-6
    fd = (riemann_w(rho + h, u) - riemann_w(rho - h, u)) / (2 * h)
    assert np.max(np.abs(fd - gw[..., 0]) / np.abs(gw[..., 0])) < 1e-6


def test_gradients_need_interior():
    with pytest.raises(OutsideDomain):
        riemann_gradients(0.0, 1.0)


def test_hessians_match_sympy_and_are_psd(rng):
    rho = rng.uniform(1e-3, 10, 1000)
    u = rng.uniform(-10, 10, 1000)
    hw, hz = riemann_hessians(rho, u)
    ref = np.array(HESS(rho, u))
    np.testing.assert_allclose(hw[..., 0, 0], ref[0], rtol=1e-9)
    np.testing.assert_allclose(hw[..., 0, 1], ref[1], rtol=1e-9)
    np.testing.assert_allclose(hw[..., 1, 1], ref[2], rtol=1e-9)
    np.testing.assert_allclose(hz[..., 0, 0], ref[3], rtol=1e-9)
    np.testing.assert_allclose(hz[..., 0, 1], ref[4], rtol=1e-9)
    np.testing.assert_allclose(hz[..., 1, 1], ref[5], rtol=1e-9)
    for H in (hw, hz):
        ev = np.linalg.eigvalsh(H)
        assert np.all(ev[..., 0] >= -1e-8 * np.maximum(1, np.abs(ev[..., 1])))


def test_domain_examples():
    assert domain_classify(1.0, 0.0) is DomainClass.PhysicalInterior
    assert domain_classify(-0.2, 1.0) is DomainClass.HyperbolicNonphysical
    assert domain_classify(-1.0, 0.0) is DomainClass.NonHyperbolic
    assert discriminant(-1.0, 0.0) == -4.0


@given(st.floats(-10, 10), us)
def test_domain_predicates_consistent(rho, u):
    cls = domain_classify(rho, u)
    if rho >= 0:
        assert discriminant(rho, u) >= 0
        assert cls is not DomainClass.NonHyperbolic


def test_genuine_nonlinearity_examples():
    assert genuine_nonlinearity(1.0, 0.0) == pytest.approx((1.0, 1.0))
    assert genuine_nonlinearity(0.0, 2.0) == pytest.approx((2.0, 0.0))
    assert genuine_nonlinearity(2.0, 1.0) == pytest.approx((4 / 3, 2 / 3))


@given(st.floats(0.01, 10.0), us)
def test_genuine_nonlinearity_matches_fd(rho, u):
    g = np.array(genuine_nonlinearity(rho, u))
    fd = np.array(genuine_nonlinearity_fd(rho, u))
    assert np.max(np.abs(g - fd)) < 1e-6 * (1 + np.max(np.abs(g)))


def test_physstate_mirror():
    assert PhysState(2.0, 1.0).mirror() == PhysState(2.0, -1.0)
