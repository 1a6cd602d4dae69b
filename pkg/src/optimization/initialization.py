"""
Starting Target Selection

Given a strictly feasible (x, y, s), choose w^s = (v0, v) minimizing the
initial proximity Omega(u, w). The optimal v_i come from the scalar
equations zeta_i(v_i^2) = gamma nu_i where gamma minimizes a convex
function g; its derivative is monotone, so gamma is found by bisection.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.exceptions import OutsideDomain
from ..core.log import get_logger
from .cones import ConeKind, ConeSpec, inner, zeta, zeta_solve
from .model import ControlVars, Iterate, Problem, duality_gap
from .solver import mu_star

logger = get_logger(__name__)

MAX_EXTENSIONS = 5


@dataclass
class GammaSolution:
    """Result of the gamma bisection."""

    gamma: float
    v_bar: np.ndarray
    bracket: Tuple[float, float]
    iterations: int
    collapsed: bool = False


def block_products(p: Problem, u: Iterate) -> np.ndarray:
    """Per-block <s_i, x_i>."""
    return np.array([inner(s_i, x_i) for s_i, x_i in zip(u.s, u.x)])


def gamma_bracket(p: Problem, u: Iterate) -> Tuple[float, float]:
    """[min(min_i nu_i/<s_i,x_i>, nu/<s,x>), max_i nu_i/<s_i,x_i>]."""
    products = block_products(p, u)
    if np.any(products <= 0.0):
        raise OutsideDomain("block products <s_i, x_i> must be positive", condition="interior")
    gamma0 = p.nus / products
    lo = min(float(gamma0.min()), p.nu_total / float(products.sum()))
    return lo, float(gamma0.max())


def v_bar(c: ConeSpec, x: np.ndarray, s: np.ndarray, nu_i: float, gamma: float) -> float:
    """Zero below gamma_1 = zeta(0)/nu_i, otherwise the root of zeta(t) = gamma nu_i."""
    if gamma <= zeta(c, x, s, 0.0) / nu_i:
        return 0.0
    return zeta_solve(c, x, s, gamma * nu_i)


def v_bars(p: Problem, u: Iterate, gamma: float) -> np.ndarray:
    return np.array([
        v_bar(cone, x_i, s_i, cone.nu, gamma)
        for cone, x_i, s_i in zip(p.cones, u.x, u.s)
    ])


def g_prime(p: Problem, u: Iterate, gamma: float) -> float:
    """sum_i [<s_i,x_i> - nu_i v_bar_i(gamma) - nu_i/gamma]; nondecreasing in gamma."""
    if not gamma > 0.0:
        raise OutsideDomain(f"gamma must be positive, got {gamma}", condition="gamma")
    products = block_products(p, u)
    return float(np.sum(products - p.nus * v_bars(p, u, gamma) - p.nus / gamma))


def solve_gamma(p: Problem, u: Iterate, tol: float = 1e-10) -> GammaSolution:
    """
    Minimize g by bisection on the sign of g'.

    The returned gamma is the right end of the final bracket, where g' >= 0.
    """
    lo, hi = gamma_bracket(p, u)
    bracket = (lo, hi)
    if hi - lo <= tol * hi:
        return GammaSolution(hi, v_bars(p, u, hi), bracket, 0, collapsed=True)

    scale = 1.0 + duality_gap(p, u)
    extensions = 0
    while g_prime(p, u, hi) < -tol * scale and extensions < MAX_EXTENSIONS:
        logger.warning("gamma_bracket_extended", hi=hi)
        lo, hi = hi, 2.0 * hi
        extensions += 1

    iterations = 0
    while hi - lo > tol * hi and iterations < 200:
        iterations += 1
        mid = 0.5 * (lo + hi)
        slope = g_prime(p, u, mid)
        if abs(slope) <= tol * scale:
            hi = mid
            break
        if slope < 0.0:
            lo = mid
        else:
            hi = mid
    return GammaSolution(hi, v_bars(p, u, hi), bracket, iterations)


def choose_w_start(p: Problem, u: Iterate, tol: float = 1e-10) -> ControlVars:
    """
    Starting controls v_i = sqrt(v_bar_i(gamma*)),
    v0 = <s,x> + (<s,x> - |v|^2_nu)/nu.

    Raises:
        OutsideDomain: If the assembled controls violate a domain condition.
    """
    solution = solve_gamma(p, u, tol)
    gap = duality_gap(p, u)
    v = np.sqrt(solution.v_bar)
    w = ControlVars(0.0, v)
    spare = gap - w.norm_nu_sq(p.nus)
    w.v0 = gap + spare / p.nu_total
    if not spare > 0.0:
        raise OutsideDomain(
            "starting controls leave v0 <= |v|^2_nu", condition="control"
        )
    logger.debug(
        "start_controls",
        gamma=solution.gamma,
        iterations=solution.iterations,
        v0=w.v0,
        collapsed=solution.collapsed,
    )
    return w


def mu_star_bound(p: Problem, u: Iterate) -> float:
    """(1/(1+nu)) [3 <s,x> + max_i gamma0_i <s,x>^2]."""
    gap = duality_gap(p, u)
    gamma0_max = float(np.max(p.nus / block_products(p, u)))
    return (3.0 * gap + gamma0_max * gap**2) / (1.0 + p.nu_total)


def mu_star_bound_check(p: Problem, u: Iterate, w_s: ControlVars) -> float:
    """Slack of the a-priori bound on mu*(w^s); nonnegative when it holds."""
    return mu_star_bound(p, u) - mu_star(p, w_s)


def lp_start_family(p: Problem, u: Iterate, xi: float) -> ControlVars:
    """
    Zero-proximity LP start v_i = sqrt(x_i s_i - xi), v0 = <x,s> + xi
    for 0 < xi <= min_i x_i s_i.
    """
    if any(cone.kind is not ConeKind.NONNEG for cone in p.cones):
        raise ValueError("the explicit start family exists for nonneg blocks only")
    products = block_products(p, u)
    if not 0.0 < xi <= float(products.min()):
        raise OutsideDomain(
            f"xi must lie in (0, {float(products.min()):.6e}], got {xi}", condition="control"
        )
    v = np.sqrt(np.maximum(products - xi, 0.0))
    return ControlVars(float(products.sum()) + xi, v)


def naive_start(p: Problem, u: Iterate) -> ControlVars:
    """Main-central-path target (v = 0) with v0 = <s,x>(1 + 1/nu)."""
    gap = duality_gap(p, u)
    return ControlVars(gap * (1.0 + 1.0 / p.nu_total), np.zeros(p.n_blocks))
