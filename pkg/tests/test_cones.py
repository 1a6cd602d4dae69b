"""
Tests for the symmetric cone barrier oracles.
"""

import math

import numpy as np
import pytest

from src.core.exceptions import OutsideDomain, ShapeMismatch, TargetBelowZetaZero
from src.optimization.cones import (
    ConeKind,
    ConeSpec,
    barrier_eval,
    barrier_grad,
    boundary_slack,
    d3_form,
    d4_form,
    distinguished_point,
    dual_constant,
    hess_apply,
    hess_inv_apply,
    hess_matrix,
    hess_inv_matrix,
    inner,
    lorentz_scaling_parameters,
    max_step,
    membership_interior,
    sample_interior,
    scaling_point,
    zeta,
    zeta_prime,
    zeta_solve,
)

NONNEG = ConeSpec.nonneg()
LOR2 = ConeSpec.lorentz(2)
PSD2 = ConeSpec.psd(2)

ALL_CONES = [
    NONNEG,
    ConeSpec.lorentz(1),
    LOR2,
    ConeSpec.lorentz(5),
    ConeSpec.psd(1),
    PSD2,
    ConeSpec.psd(3),
]


def test_cone_spec_parameters():
    assert NONNEG.nu == 1 and NONNEG.shape == (1,)
    assert LOR2.nu == 2 and LOR2.dim == 3 and LOR2.label == "lorentz(3)"
    assert PSD2.nu == 2 and PSD2.dim == 4 and PSD2.free_dim == 3
    assert ConeSpec("psd", 3).kind is ConeKind.PSD
    with pytest.raises(ShapeMismatch):
        ConeSpec(ConeKind.NONNEG, 2)


def test_membership_values():
    assert membership_interior(NONNEG, np.array([1.0]))
    assert not membership_interior(LOR2, np.array([1.0, 1.0, 0.0]))
    assert membership_interior(PSD2, np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert not membership_interior(NONNEG, np.array([1.0]), margin=1.0)


def test_membership_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        membership_interior(LOR2, np.ones(2))


def test_barrier_values():
    assert barrier_eval(NONNEG, np.array([1.0])) == 0.0
    assert barrier_eval(LOR2, np.array([1.0, 0.0, 0.0]), "dual") == pytest.approx(
        -2.0 + 2.0 * math.log(2.0), abs=1e-14
    )
    assert barrier_eval(PSD2, np.diag([2.0, 3.0])) == pytest.approx(-math.log(6.0))
    assert dual_constant(NONNEG) == -1.0
    assert dual_constant(ConeSpec.psd(3)) == -3.0


def test_barrier_outside_domain():
    with pytest.raises(OutsideDomain):
        barrier_eval(NONNEG, np.array([-1.0]))
    with pytest.raises(OutsideDomain):
        barrier_grad(PSD2, np.diag([1.0, -1.0]))


def test_derivatives_nonneg():
    x = np.array([2.0])
    np.testing.assert_allclose(barrier_grad(NONNEG, x), [-0.5])
    np.testing.assert_allclose(hess_apply(NONNEG, x, np.array([1.0])), [0.25])
    np.testing.assert_allclose(hess_inv_apply(NONNEG, x, np.array([1.0])), [4.0])
    one = np.array([1.0])
    np.testing.assert_allclose(d3_form(NONNEG, one, one, one), [-2.0])
    np.testing.assert_allclose(d4_form(NONNEG, one, one, one), [6.0])


def test_derivatives_at_distinguished_points(rng):
    e0 = distinguished_point(LOR2)
    np.testing.assert_allclose(barrier_grad(LOR2, e0), [-2.0, 0.0, 0.0])
    h = rng.standard_normal(3)
    np.testing.assert_allclose(hess_apply(LOR2, e0, h), 2.0 * h)

    eye = distinguished_point(PSD2)
    np.testing.assert_allclose(barrier_grad(PSD2, eye), -np.eye(2))
    g = rng.standard_normal((2, 2))
    hmat = g + g.T
    np.testing.assert_allclose(hess_apply(PSD2, eye, hmat), hmat)
    np.testing.assert_allclose(d3_form(PSD2, eye, hmat, hmat), -2.0 * hmat @ hmat)


def test_psd_fourth_derivative_commuting():
    eye = np.eye(2)
    h = np.diag([1.0, 2.0])
    q = np.diag([3.0, -1.0])
    np.testing.assert_allclose(d4_form(PSD2, eye, h, q), 6.0 * q @ h @ q)


@pytest.mark.parametrize("cone", ALL_CONES, ids=lambda c: c.label)
def test_homogeneity_of_higher_derivatives(cone, rng):
    """D3F(x)[x, h] = -2 grad^2 F(x) h and D4F(x)[x][q]^2 = -3 D3F(x)[q]^2"""
    bar = cone.barrier
    for _ in range(20):
        x = sample_interior(cone, rng)
        h = bar.random_direction(rng)
        q = bar.random_direction(rng)
        lhs = d3_form(cone, x, x, h)
        rhs = -2.0 * hess_apply(cone, x, h)
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * (1.0 + np.linalg.norm(rhs))
        lhs = d4_form(cone, x, x, q)
        rhs = -3.0 * d3_form(cone, x, q, q)
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * (1.0 + np.linalg.norm(rhs))


@pytest.mark.parametrize("cone", ALL_CONES, ids=lambda c: c.label)
def test_inverse_hessian_round_trip(cone, rng):
    bar = cone.barrier
    for _ in range(20):
        x = sample_interior(cone, rng)
        h = bar.random_direction(rng)
        back = hess_inv_apply(cone, x, hess_apply(cone, x, h))
        assert np.linalg.norm(back - h) <= 1e-10 * (1.0 + np.linalg.norm(h))
        eye = hess_matrix(cone, x) @ hess_inv_matrix(cone, x)
        np.testing.assert_allclose(eye, np.eye(cone.dim), atol=1e-9)


@pytest.mark.parametrize("cone", ALL_CONES, ids=lambda c: c.label)
def test_d3_is_symmetric_bilinear(cone, rng):
    bar = cone.barrier
    x = sample_interior(cone, rng)
    h1, h2 = bar.random_direction(rng), bar.random_direction(rng)
    np.testing.assert_allclose(d3_form(cone, x, h1, h2), d3_form(cone, x, h2, h1), atol=1e-10)


def test_scaling_point_values():
    np.testing.assert_allclose(scaling_point(NONNEG, np.array([4.0]), np.array([1.0])), [2.0])
    lor1 = ConeSpec.lorentz(1)
    np.testing.assert_allclose(
        scaling_point(lor1, np.array([1.0, 0.0]), np.array([2.0, 0.0])), [1.0, 0.0], atol=1e-12
    )
    np.testing.assert_allclose(scaling_point(PSD2, np.eye(2), np.eye(2)), np.eye(2), atol=1e-12)


@pytest.mark.parametrize("cone", ALL_CONES, ids=lambda c: c.label)
def test_scaling_point_residual(cone, rng):
    for _ in range(50):
        x = sample_interior(cone, rng)
        s = sample_interior(cone, rng)
        w = scaling_point(cone, x, s)
        assert membership_interior(cone, w)
        assert np.linalg.norm(s - hess_apply(cone, w, x)) <= 1e-9 * (1.0 + np.linalg.norm(s))


def test_lorentz_scaling_near_proportional_pair(rng):
    """Pairs with s almost proportional to the reflection of x"""
    for _ in range(50):
        x = sample_interior(LOR2, rng)
        jx = LOR2.barrier.reflect(x)
        s = 1.5 * (jx + 1e-6 * rng.standard_normal(3))
        w = scaling_point(LOR2, x, s)
        assert np.linalg.norm(s - hess_apply(LOR2, w, x)) <= 1e-9 * (1.0 + np.linalg.norm(s))


def test_lorentz_scaling_parameters(rng):
    params = lorentz_scaling_parameters(np.array([1.0, 0.0]), np.array([1.0, 0.5]))
    assert 2.0 * params.alpha * params.f_alpha == pytest.approx(1.0, abs=1e-12)
    assert params.delta > 0.0


def test_zeta_values():
    x, s = np.array([2.0]), np.array([3.0])
    assert zeta(NONNEG, x, s, 0.0) == pytest.approx(1.0 / 6.0)
    assert zeta(PSD2, np.eye(2), np.eye(2), 0.0) == pytest.approx(2.0)
    assert zeta_prime(NONNEG, x, s, 0.0) == pytest.approx(1.0 / 36.0)


@pytest.mark.parametrize("cone", [NONNEG, LOR2, PSD2], ids=lambda c: c.label)
def test_zeta_on_centered_pair(cone, rng):
    """s = -mu grad F(x) gives zeta(tau) = nu / (mu - tau)"""
    x = sample_interior(cone, rng)
    mu = 1.7
    s = -mu * barrier_grad(cone, x)
    for tau in (0.0, 0.5, 1.2):
        assert zeta(cone, x, s, tau) == pytest.approx(cone.nu / (mu - tau), rel=1e-10)
    gamma = 2.0
    tau = zeta_solve(cone, x, s, gamma * cone.nu)
    assert tau == pytest.approx(mu - 1.0 / gamma, rel=1e-9)


def test_zeta_outside_domain():
    with pytest.raises(OutsideDomain):
        zeta(NONNEG, np.array([2.0]), np.array([3.0]), 6.0)


def test_zeta_solve_nonneg():
    assert zeta_solve(NONNEG, np.array([2.0]), np.array([3.0]), 2.0) == pytest.approx(5.5, rel=1e-10)
    with pytest.raises(TargetBelowZetaZero):
        zeta_solve(NONNEG, np.array([2.0]), np.array([3.0]), 0.1)


@pytest.mark.parametrize("cone", ALL_CONES, ids=lambda c: c.label)
def test_zeta_solve_residual(cone, rng):
    for _ in range(20):
        x = sample_interior(cone, rng)
        s = sample_interior(cone, rng)
        target = zeta(cone, x, s, 0.0) * rng.uniform(1.05, 20.0)
        tau = zeta_solve(cone, x, s, target)
        assert 0.0 < tau < max_step(cone, s, barrier_grad(cone, x))
        assert abs(zeta(cone, x, s, tau) - target) <= 1e-10 * target


def test_max_step_and_slack():
    assert max_step(NONNEG, np.array([2.0]), np.array([-1.0])) == pytest.approx(2.0)
    assert max_step(NONNEG, np.array([2.0]), np.array([1.0])) == math.inf
    assert max_step(LOR2, np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])) == pytest.approx(1.0)
    assert max_step(PSD2, np.eye(2), -np.diag([0.5, 0.25])) == pytest.approx(2.0)
    assert boundary_slack(LOR2, np.array([2.0, 1.0, 0.0])) == pytest.approx(1.0)
    assert boundary_slack(PSD2, np.diag([3.0, -1.0])) == pytest.approx(-1.0)


@pytest.mark.parametrize("cone", ALL_CONES, ids=lambda c: c.label)
def test_gradient_identities(cone, rng):
    for _ in range(20):
        x = sample_interior(cone, rng)
        assert inner(barrier_grad(cone, x), x) == pytest.approx(-cone.nu, rel=1e-10)
        assert inner(hess_apply(cone, x, x), x) == pytest.approx(cone.nu, rel=1e-10)
