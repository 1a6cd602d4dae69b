"""
Shared fixtures for the solver test suite.
"""

import numpy as np
import pytest

from src.core.log import configure_logging
from src.optimization.cones import ConeSpec
from src.optimization.model import ControlVars, Iterate, Problem, SolverConfig, random_instance

configure_logging("WARNING")


@pytest.fixture(autouse=True)
def _restore_logging():
    """Undo logging reconfiguration by CLI runs, whose captured stderr is closed afterwards."""
    yield
    configure_logging("WARNING")


@pytest.fixture
def mixed_cones():
    return [ConeSpec.nonneg()] * 4 + [ConeSpec.lorentz(2), ConeSpec.psd(2)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def lp_two():
    """min x1 + x2 s.t. x1 + x2 = 2 with the start x = s = (1, 1), y = 0."""
    nonneg = ConeSpec.nonneg()
    problem = Problem(
        (nonneg, nonneg),
        [np.array([[1.0]]), np.array([[1.0]])],
        np.array([2.0]),
        [np.array([1.0]), np.array([1.0])],
    )
    u = Iterate.from_xy(problem, [np.array([1.0]), np.array([1.0])], np.zeros(1))
    return problem, u


@pytest.fixture
def lp_two_central(lp_two):
    """The same LP with the target w = (3, (0, 0)) on which the start is central."""
    problem, u = lp_two
    return problem, u, ControlVars(3.0, np.zeros(2))


@pytest.fixture
def mixed_instance(mixed_cones):
    return random_instance(7, 5, mixed_cones)


@pytest.fixture
def cfg():
    return SolverConfig(beta1=0.25, beta2=2.0, eps=1e-6)
