"""
Optimization Package for the Multiconic PTS Solver

This package contains the numerical core:
- Symmetric cone barriers and scaling points
- Hyperbolic-coupling barriers
- Problem data, KKT systems and the predictor-corrector driver
- Starting target selection and property suites
"""

from .cones import ConeKind, ConeSpec
from .coupling import CouplingPoint
from .initialization import choose_w_start
from .model import ControlVars, Iterate, Problem, SolverConfig, random_instance
from .solver import SolveResult, SolveStatus, omega_measure, solve
from .verification import CheckResult, run_suite

__all__ = [
    'ConeKind',
    'ConeSpec',
    'CouplingPoint',
    'ControlVars',
    'Iterate',
    'Problem',
    'SolverConfig',
    'random_instance',
    'choose_w_start',
    'SolveResult',
    'SolveStatus',
    'omega_measure',
    'solve',
    'CheckResult',
    'run_suite',
]
