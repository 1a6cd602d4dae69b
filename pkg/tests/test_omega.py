"""
Tests for the self-concordance scalar functions.
"""

import math

import pytest

from src.core.exceptions import OutsideDomain
from src.optimization.omega import (
    omega,
    omega_inv,
    omega_star,
    omega_star_inv,
    omega_star_inv_slack,
    omega_util,
)


def test_known_values():
    assert omega(1.0) == pytest.approx(1.0 - math.log(2.0), abs=1e-15)
    assert omega(0.0) == 0.0
    assert omega_star(0.0) == 0.0


def test_omega_inv_quarter():
    tau = omega_inv(0.25)
    assert 0.0 < tau < 3.0
    assert abs(omega(tau) - 0.25) <= 1e-12


@pytest.mark.parametrize("t", [1e-8, 1e-3, 0.1, 0.3, 1.0, 2.5, 5.0])
def test_inverses_round_trip(t):
    assert omega(omega_inv(t)) == pytest.approx(t, rel=1e-10, abs=1e-14)
    r = omega_star_inv(t)
    assert 0.0 <= r < 1.0
    assert omega_star(r) == pytest.approx(t, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("t", [0.5, 5.0, 36.0, 37.0, 50.0, 700.0])
def test_omega_star_inverse_for_large_targets(t):
    slack = omega_star_inv_slack(t)
    assert 0.0 < slack <= 1.0
    # omega_star(1 - r) = r - 1 - ln r
    assert slack - 1.0 - math.log(slack) == pytest.approx(t, rel=1e-12)
    tau = omega_star_inv(t)
    assert 0.0 < tau <= 1.0
    assert tau == pytest.approx(1.0 - slack, abs=1e-15)


def test_domain_errors():
    with pytest.raises(OutsideDomain):
        omega(-1.0)
    with pytest.raises(OutsideDomain):
        omega_star(1.0)
    with pytest.raises(OutsideDomain):
        omega_inv(-0.1)
    with pytest.raises(OutsideDomain):
        omega_star_inv(-0.1)


def test_dispatch():
    assert omega_util("omega", 1.0) == omega(1.0)
    assert omega_util("omega_star_inv", 2.0) == omega_star_inv(2.0)
    with pytest.raises(ValueError):
        omega_util("psi", 1.0)
