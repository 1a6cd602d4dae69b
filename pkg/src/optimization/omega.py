"""
Self-Concordance Scalar Functions

omega(t) = t - ln(1 + t) and its conjugate omega_star(t) = -t - ln(1 - t),
with inverses on the nonnegative half-line.
"""

import math
from typing import Callable, Literal

from ..core.exceptions import NoConvergence, OutsideDomain

OmegaKind = Literal["omega", "omega_star", "omega_inv", "omega_star_inv"]

_NEWTON_BUDGET = 200
_INV_TOL = 1e-14
_LOG_SPACE_FROM = 1.0


def omega(t: float) -> float:
    if t <= -1.0:
        raise OutsideDomain(f"omega needs t > -1, got {t}", condition="omega")
    return t - math.log1p(t)


def omega_star(t: float) -> float:
    if t >= 1.0:
        raise OutsideDomain(f"omega_star needs t < 1, got {t}", condition="omega_star")
    return -t - math.log1p(-t)


def _invert_from_right(
    f: Callable[[float], float],
    df: Callable[[float], float],
    target: float,
    start: float,
) -> float:
    # f convex increasing with f(start) >= target, so Newton descends monotonically
    tau = start
    for _ in range(_NEWTON_BUDGET):
        r = f(tau) - target
        if abs(r) <= _INV_TOL * max(1.0, target):
            return tau
        slope = df(tau)
        if slope <= 0.0:
            return tau
        step = r / slope
        nxt = tau - step
        if nxt < 0.0:
            nxt = 0.5 * tau
        if abs(nxt - tau) <= 1e-17 * max(1.0, tau):
            return nxt
        tau = nxt
    raise NoConvergence("omega inversion did not converge", {"target": target})


def omega_inv(t: float) -> float:
    """Nonnegative root of omega(tau) = t."""
    if t < 0.0:
        raise OutsideDomain(f"omega_inv needs t >= 0, got {t}", condition="omega_inv")
    if t == 0.0:
        return 0.0
    start = max(math.sqrt(2.0 * t), t)
    while omega(start) < t:
        start *= 2.0
    return _invert_from_right(omega, lambda x: x / (1.0 + x), t, start)


def _star_log_slack(t: float) -> float:
    # s = -ln(1 - tau) solves s + expm1(-s) = t; start from the right at t + 1
    return _invert_from_right(lambda s: s + math.expm1(-s), lambda s: -math.expm1(-s), t, t + 1.0)


def _check_star_target(t: float) -> None:
    if t < 0.0:
        raise OutsideDomain(
            f"omega_star_inv needs t >= 0, got {t}", condition="omega_star_inv"
        )


def omega_star_inv(t: float) -> float:
    """
    Root in [0, 1) of omega_star(tau) = t.

    Above t = 1 the root is found as 1 - exp(-s) with s solved in log
    space. Beyond t of about 36 it rounds to 1.0; omega_star_inv_slack
    keeps 1 - tau.
    """
    _check_star_target(t)
    if t == 0.0:
        return 0.0
    if t <= _LOG_SPACE_FROM:
        start = -math.expm1(-(t + 1.0))
        return _invert_from_right(omega_star, lambda x: x / (1.0 - x), t, start)
    return -math.expm1(-_star_log_slack(t))


def omega_star_inv_slack(t: float) -> float:
    """1 - omega_star_inv(t), computed without cancellation."""
    _check_star_target(t)
    if t <= _LOG_SPACE_FROM:
        return 1.0 - omega_star_inv(t)
    return math.exp(-_star_log_slack(t))


_DISPATCH = {
    "omega": omega,
    "omega_star": omega_star,
    "omega_inv": omega_inv,
    "omega_star_inv": omega_star_inv,
}


def omega_util(kind: OmegaKind, t: float) -> float:
    """Evaluate one of the four scalar functions by name."""
    try:
        fn = _DISPATCH[kind]
    except KeyError:
        raise ValueError(f"unknown omega function {kind!r}")
    return fn(float(t))
