"""
Tests for the finite-difference oracle.
"""

import math

import numpy as np
import pytest

from src.core.exceptions import StencilOutsideDomain
from src.optimization import fdcheck
from src.optimization.cones import ConeSpec, barrier_eval, d3_form, hess_apply, inner


def quartic(v):
    return float(np.sum(v**4))


def test_fd_grad_quadratic():
    g = fdcheck.fd_grad(lambda v: float(v @ v), np.array([1.0, -2.0, 0.5]))
    np.testing.assert_allclose(g, [2.0, -4.0, 1.0], atol=1e-8)


def test_fourth_directional_derivative_of_quartic():
    assert fdcheck.fd_dirk(quartic, np.array([0.3]), np.array([1.0]), 4) == pytest.approx(24.0, abs=1e-3)


def test_third_directional_derivative_of_log_barrier():
    nonneg = ConeSpec.nonneg()
    value = fdcheck.fd_dirk(lambda v: barrier_eval(nonneg, v), np.array([1.0]), np.array([1.0]), 3)
    assert value == pytest.approx(-2.0, abs=1e-4)


@pytest.mark.parametrize("order", [2, 3, 4])
def test_central_weights_moments(order):
    weights = np.array(fdcheck.central_weights(order))
    offsets = np.arange(-order, order + 1)
    for power in range(2 * order + 1):
        expected = math.factorial(order) if power == order else 0.0
        assert float(weights @ offsets**power) == pytest.approx(expected, abs=1e-9)


def test_second_order_stencil_weights():
    expected = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]
    np.testing.assert_allclose(fdcheck.central_weights(2), expected, atol=1e-12)


def test_unsupported_order():
    with pytest.raises(ValueError):
        fdcheck.fd_dirk(quartic, np.zeros(1), np.ones(1), 5)


def test_stencil_outside_domain():
    nonneg = ConeSpec.nonneg()
    with pytest.raises(StencilOutsideDomain):
        fdcheck.fd_dirk(lambda v: barrier_eval(nonneg, v), np.array([1e-9]), np.array([1.0]), 2, h=1e-3)


def test_non_finite_values_are_rejected():
    with pytest.raises(StencilOutsideDomain):
        fdcheck.fd_grad(lambda v: math.inf, np.zeros(2))


@pytest.mark.parametrize(
    "cone",
    [ConeSpec.lorentz(2), ConeSpec.psd(2)],
    ids=lambda c: c.label,
)
def test_barrier_derivatives_against_stencils(cone, rng):
    bar = cone.barrier
    x = bar.sample(rng)
    h = bar.random_direction(rng)
    h = h / math.sqrt(inner(hess_apply(cone, x, h), h)) * 0.3

    def f(vec):
        return barrier_eval(cone, vec.reshape(cone.shape))

    xf, hf = x.reshape(-1), h.reshape(-1)
    assert fdcheck.fd_dirk(f, xf, hf, 2) == pytest.approx(inner(hess_apply(cone, x, h), h), rel=1e-5)
    assert fdcheck.fd_dirk(f, xf, hf, 3) == pytest.approx(inner(d3_form(cone, x, h, h), h), rel=1e-3, abs=1e-4)


def test_block_flattening_round_trip():
    cones = [ConeSpec.nonneg(), ConeSpec.lorentz(2), ConeSpec.psd(2)]
    blocks = [np.array([1.0]), np.array([3.0, 1.0, 2.0]), np.array([[2.0, 1.0], [1.0, 2.0]])]
    flat = fdcheck.flatten_blocks(blocks)
    assert flat.size == 8
    for original, restored in zip(blocks, fdcheck.unflatten_blocks(cones, flat)):
        np.testing.assert_array_equal(original, restored)


def test_fd_grad_values():
    assert fdcheck.fd_grad(lambda v: float(v[0] ** 2), np.array([3.0]))[0] == pytest.approx(6.0, abs=1e-8)
    nonneg = ConeSpec.nonneg()
    assert fdcheck.fd_grad(lambda v: barrier_eval(nonneg, v), np.array([2.0]))[0] == pytest.approx(-0.5, abs=1e-8)


@pytest.mark.parametrize("order", [2, 3, 4])
def test_fd_dirk_is_exact_on_polynomials(order):
    coefficients = np.array([0.5, -1.0, 2.0, 0.25, 1.5])[: order + 1]

    def f(v):
        return float(np.polyval(coefficients[::-1], v[0]))

    expected = math.factorial(order) * coefficients[order]
    assert fdcheck.fd_dirk(f, np.array([0.7]), np.array([1.0]), order) == pytest.approx(expected, rel=1e-3, abs=1e-4)
