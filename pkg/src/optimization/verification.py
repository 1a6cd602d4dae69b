"""
Property Suites

Randomized checks of the barrier identities and inequalities the solver
relies on, per cone family. Every check maps (cone, rng) to a
nonnegative violation; a suite row records the worst violation over all
samples against the check's tolerance.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.exceptions import DegenerateDirection, McoptError, VerificationFailure
from ..core.log import get_logger
from . import fdcheck
from .cones import (
    ConeKind,
    ConeSpec,
    barrier_eval,
    barrier_grad,
    boundary_slack,
    d3_form,
    d4_form,
    distinguished_point,
    hess_apply,
    hess_inv_apply,
    hess_matrix,
    inner,
    local_norm,
    lorentz_scaling_parameters,
    max_step,
    sample_interior,
    scaling_point,
    zeta,
    zeta_solve,
)
from .coupling import (
    CouplingPoint,
    Representation,
    domain_check,
    newton_decrement_sq,
    phi_grad,
    phi_grad_dual,
    phi_hess_apply,
    phi_value,
    s_bar,
    sample_coupling_point,
    sc_ratio_along,
    x_bar,
)

logger = get_logger(__name__)

CheckFn = Callable[[ConeSpec, np.random.Generator], float]

FAMILIES: Dict[str, List[ConeSpec]] = {
    "nonneg": [ConeSpec.nonneg()],
    "lorentz": [ConeSpec.lorentz(1), ConeSpec.lorentz(2), ConeSpec.lorentz(5)],
    "psd": [ConeSpec.psd(1), ConeSpec.psd(2), ConeSpec.psd(3), ConeSpec.psd(5)],
}

ALL_KINDS = frozenset(ConeKind)


@dataclass
class PropertyCheck:
    name: str
    tolerance: float
    fn: CheckFn
    kinds: FrozenSet[ConeKind] = ALL_KINDS
    applies: Optional[Callable[[ConeSpec], bool]] = None

    def covers(self, c: ConeSpec) -> bool:
        if c.kind not in self.kinds:
            return False
        return self.applies is None or self.applies(c)


@dataclass
class CheckResult:
    """One suite row: worst violation of a check on one cone."""

    name: str
    family: str
    samples: int
    worst: float
    tolerance: float
    passed: bool
    errors: int = 0

    def as_row(self) -> dict:
        return {
            "check": self.name,
            "cone": self.family,
            "samples": self.samples,
            "worst": self.worst,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "errors": self.errors,
        }


CHECKS: List[PropertyCheck] = []


def _register(name: str, tolerance: float, kinds=ALL_KINDS, applies=None):
    def decorate(fn: CheckFn) -> CheckFn:
        CHECKS.append(PropertyCheck(name, tolerance, fn, frozenset(kinds), applies))
        return fn

    return decorate


def _norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float).reshape(-1)))


def _rel(a, b) -> float:
    return _norm(np.asarray(a) - np.asarray(b)) / (1.0 + _norm(b))


def _below(c: ConeSpec, e: np.ndarray) -> float:
    """How far e sits outside the closed cone, relative to its size."""
    return max(0.0, -boundary_slack(c, e)) / (1.0 + _norm(e))


def _direction(c: ConeSpec, rng: np.random.Generator) -> np.ndarray:
    return c.barrier.random_direction(rng)


def _coupling_direction(c: ConeSpec, rng: np.random.Generator) -> CouplingPoint:
    return CouplingPoint(_direction(c, rng), _direction(c, rng), float(rng.standard_normal()))


# Barrier identities

@_register("log_homogeneity", 1e-10)
def check_log_homogeneity(c, rng):
    x = sample_interior(c, rng)
    tau = rng.uniform(0.5, 2.0)
    f = barrier_eval(c, x)
    return abs(barrier_eval(c, tau * x) - f + c.nu * math.log(tau)) / (1.0 + abs(f))


@_register("gradient_identities", 1e-10)
def check_gradient_identities(c, rng):
    x = sample_interior(c, rng)
    first = abs(inner(barrier_grad(c, x), x) + c.nu)
    second = abs(inner(hess_apply(c, x, x), x) - c.nu)
    return max(first, second) / c.nu


@_register("conjugate_duality", 1e-9)
def check_conjugate_duality(c, rng):
    x = sample_interior(c, rng)
    g = barrier_grad(c, x)
    f = barrier_eval(c, x)
    grad_err = _rel(barrier_grad(c, -g, "dual"), -x)
    value_err = abs(barrier_eval(c, -g, "dual") - (inner(g, x) - f)) / (1.0 + abs(f))
    return max(grad_err, value_err)


@_register("fenchel_bounds", 1e-10)
def check_fenchel_bounds(c, rng):
    x = sample_interior(c, rng)
    s = sample_interior(c, rng)
    mid = barrier_eval(c, x) + barrier_eval(c, s, "dual") + c.nu
    lower = c.nu * math.log(c.nu / inner(s, x))
    upper = c.nu * math.log(inner(barrier_grad(c, x), barrier_grad(c, s, "dual")) / c.nu)
    return max(0.0, lower - mid, mid - upper) / (1.0 + abs(mid))


@_register("fenchel_equality", 1e-9)
def check_fenchel_equality(c, rng):
    x = sample_interior(c, rng)
    mu = rng.uniform(0.1, 10.0)
    s = -mu * barrier_grad(c, x)
    mid = barrier_eval(c, x) + barrier_eval(c, s, "dual") + c.nu
    lower = c.nu * math.log(c.nu / inner(s, x))
    upper = c.nu * math.log(inner(barrier_grad(c, x), barrier_grad(c, s, "dual")) / c.nu)
    return max(abs(mid - lower), abs(upper - mid)) / (1.0 + abs(mid))


def _scaling_pair(c: ConeSpec, rng: np.random.Generator):
    x = sample_interior(c, rng)
    if c.kind is ConeKind.LORENTZ and rng.random() < 0.25:
        # nearly proportional to the reflection of x, where the closed form degenerates
        noise = 1e-4 * float(np.linalg.norm(x)) * rng.standard_normal(x.shape)
        s = rng.uniform(0.5, 2.0) * (c.barrier.reflect(x) + noise)
        if boundary_slack(c, s) > 0.0:
            return x, s
    return x, sample_interior(c, rng)


@_register("scaling_residual", 1e-9)
def check_scaling_residual(c, rng):
    x, s = _scaling_pair(c, rng)
    w = c.barrier.raw_scaling_point(x, s)
    return _norm(s - hess_apply(c, w, x)) / (1.0 + _norm(s))


@_register("scaling_map", 1e-9)
def check_scaling_map(c, rng):
    x, s = _scaling_pair(c, rng)
    w = scaling_point(c, x, s)
    return _rel(hess_apply(c, w, barrier_grad(c, s, "dual")), barrier_grad(c, x))


@_register("hessian_scaling", 1e-9)
def check_hessian_scaling(c, rng):
    x, s = _scaling_pair(c, rng)
    w = scaling_point(c, x, s)
    hw = hess_matrix(c, w)
    return _rel(hw @ hess_matrix(c, s) @ hw, hess_matrix(c, x))


@_register("self_scaled_identity", 1e-9)
def check_self_scaled_identity(c, rng):
    w = sample_interior(c, rng)
    x = sample_interior(c, rng)
    fx = barrier_eval(c, x)
    fw = barrier_eval(c, w)
    lhs = barrier_eval(c, hess_apply(c, w, x), "dual")
    return abs(lhs - (fx - 2.0 * fw - c.nu)) / (1.0 + abs(fx) + abs(fw))


@_register("exchange_rule", 1e-9)
def check_exchange_rule(c, rng):
    x = sample_interior(c, rng)
    u = sample_interior(c, rng)
    gu = barrier_grad(c, u)
    lhs = inner(hess_apply(c, u, x), x)
    rhs = inner(gu, hess_inv_apply(c, x, gu))
    return abs(lhs - rhs) / (1.0 + abs(lhs))


@_register("exchange_rule_operator", 1e-9)
def check_exchange_rule_operator(c, rng):
    x = sample_interior(c, rng)
    u = sample_interior(c, rng)
    q = hess_inv_apply(c, x, barrier_grad(c, u))
    return _rel(-0.5 * d3_form(c, x, q, q), hess_apply(c, u, x))


@_register("expanding_property", 1e-10)
def check_expanding_property(c, rng):
    x = sample_interior(c, rng)
    u = _direction(c, rng)
    return _below(c, -d3_form(c, x, u, u))


@_register("compatibility", 1e-9)
def check_compatibility(c, rng):
    xb = distinguished_point(c)
    h = _direction(c, rng)
    q = rng.standard_normal() * xb + rng.standard_normal() * h
    e = -3.0 * local_norm(c, xb, h) * d3_form(c, xb, q, q) - d4_form(c, xb, h, q)
    return _below(c, e)


@_register("compatibility_first", 1e-9)
def check_compatibility_first(c, rng):
    xb = distinguished_point(c)
    h = _direction(c, rng)
    e = -barrier_grad(c, xb) * local_norm(c, xb, h) - hess_apply(c, xb, h)
    return _below(c, e)


@_register("nu_bound", 1e-10)
def check_nu_bound(c, rng):
    x = sample_interior(c, rng)
    h = _direction(c, rng)
    lhs = inner(barrier_grad(c, x), h) ** 2
    rhs = c.nu * inner(hess_apply(c, x, h), h)
    return max(0.0, lhs - rhs) / (1.0 + rhs)


@_register("self_concordance", 1e-6)
def check_self_concordance(c, rng):
    bar = c.barrier
    x = sample_interior(c, rng)
    h = _direction(c, rng)
    h = 0.25 * h / local_norm(c, x, h)
    d2 = local_norm(c, x, h) ** 2
    cubic = fdcheck.fd_dirk(
        lambda vec: barrier_eval(c, bar.unflatten(vec)), bar.flatten(x), bar.flatten(h), 3
    )
    return max(0.0, cubic - 2.0 * d2**1.5) / (1.0 + abs(barrier_eval(c, x)))


@_register("zeta_shape", 1e-9)
def check_zeta_shape(c, rng):
    x = sample_interior(c, rng)
    s = sample_interior(c, rng)
    reach = max_step(c, s, barrier_grad(c, x))
    taus = np.linspace(0.0, 0.9 * reach, 11)
    values = np.array([zeta(c, x, s, t) for t in taus])
    scale = 1.0 + float(np.max(np.abs(values)))
    decrease = float(np.max(np.maximum(values[:-1] - values[1:], 0.0)))
    concave = float(np.max(np.maximum(-np.diff(values, 2), 0.0)))
    return max(decrease, concave) / scale


@_register("zeta_solve_residual", 1e-10)
def check_zeta_solve_residual(c, rng):
    x = sample_interior(c, rng)
    s = sample_interior(c, rng)
    target = zeta(c, x, s, 0.0) * rng.uniform(1.1, 10.0)
    tau = zeta_solve(c, x, s, target)
    return abs(zeta(c, x, s, tau) - target) / target


@_register("lorentz_scaling_ratio", 1e-9, kinds={ConeKind.LORENTZ})
def check_lorentz_scaling_ratio(c, rng):
    params = lorentz_scaling_parameters(sample_interior(c, rng), sample_interior(c, rng))
    return abs(2.0 * params.alpha * params.f_alpha - 1.0)


# Coupling barrier

@_register("phi_representations", 1e-9)
def check_phi_representations(c, rng):
    z = sample_coupling_point(c, rng)
    primal = phi_value(c, z, Representation.PRIMAL)
    return abs(primal - phi_value(c, z, Representation.DUAL)) / (1.0 + abs(primal))


@_register("phi_fast_path", 1e-10, kinds={ConeKind.LORENTZ, ConeKind.PSD})
def check_phi_fast_path(c, rng):
    z = sample_coupling_point(c, rng)
    primal = phi_value(c, z, Representation.PRIMAL)
    return abs(primal - phi_value(c, z, Representation.FAST)) / (1.0 + abs(primal))


@_register("phi_homogeneity", 1e-10)
def check_phi_homogeneity(c, rng):
    z = sample_coupling_point(c, rng)
    tau = rng.uniform(0.5, 2.0)
    base = phi_value(c, z)
    return abs(phi_value(c, z.scaled(tau)) - base + 2.0 * c.nu * math.log(tau)) / (1.0 + abs(base))


@_register("phi_newton_decrement", 1e-8)
def check_phi_newton_decrement(c, rng):
    z = sample_coupling_point(c, rng)
    return abs(newton_decrement_sq(c, z) - 2.0 * c.nu) / (2.0 * c.nu)


@_register("coupling_convexity", 0.0)
def check_coupling_convexity(c, rng):
    z0 = sample_coupling_point(c, rng)
    z1 = sample_coupling_point(c, rng)
    alpha = rng.uniform(0.0, 1.0)
    return 0.0 if domain_check(c, z0.scaled(1.0 - alpha).plus(z1, alpha)) else 1.0


@_register("phi_gradient_chains", 1e-9)
def check_phi_gradient_chains(c, rng):
    z = sample_coupling_point(c, rng)
    return _rel(phi_grad_dual(c, z).flatten(), phi_grad(c, z).flatten())


@_register("phi_hessian_symmetry", 1e-9)
def check_phi_hessian_symmetry(c, rng):
    z = sample_coupling_point(c, rng)
    h1 = _coupling_direction(c, rng)
    h2 = _coupling_direction(c, rng)
    a = phi_hess_apply(c, z, h1).dot(h2)
    b = phi_hess_apply(c, z, h2).dot(h1)
    return abs(a - b) / (1.0 + abs(a))


@_register("phi_convexity", 1e-10)
def check_phi_convexity(c, rng):
    z = sample_coupling_point(c, rng)
    h = _coupling_direction(c, rng)
    q = phi_hess_apply(c, z, h).dot(h)
    return max(0.0, -q) / (1.0 + abs(q))


@_register("phi_self_concordance", 1e-4)
def check_phi_self_concordance(c, rng):
    z = sample_coupling_point(c, rng)
    h = _coupling_direction(c, rng)
    try:
        ratio = sc_ratio_along(c, z, h)
    except DegenerateDirection:
        return 0.0
    return max(0.0, abs(ratio) - 1.0)


@_register("coupling_scaling_invariance", 1e-9)
def check_coupling_scaling_invariance(c, rng):
    z = sample_coupling_point(c, rng)
    w = scaling_point(c, z.x, z.s)
    return _rel(hess_apply(c, w, x_bar(c, z)), s_bar(c, z))


@_register("coupling_map_concavity", 1e-9)
def check_coupling_map_concavity(c, rng):
    z = sample_coupling_point(c, rng)
    hs = _direction(c, rng)
    hv = float(rng.standard_normal())
    s, v = z.s, z.v
    e = (
        2.0 * hv**2 * barrier_grad(c, s, "dual")
        + 4.0 * v * hv * hess_apply(c, s, hs, "dual")
        + v**2 * d3_form(c, s, hs, hs, "dual")
    )
    return _below(c, -e)


@_register(
    "lorentz_plane_factorization",
    1e-9,
    kinds={ConeKind.LORENTZ},
    applies=lambda c: c.size == 1,
)
def check_lorentz_plane_factorization(c, rng):
    z = sample_coupling_point(c, rng)
    (x0, x1), (s0, s1), v2 = z.x, z.s, z.v**2
    product = ((x0 + x1) * (s0 + s1) - 2.0 * v2) * ((x0 - x1) * (s0 - s1) - 2.0 * v2)
    delta = math.exp(c.barrier.dual_constant - phi_value(c, z, Representation.FAST))
    return abs(delta - product) / (1.0 + abs(product))


def resolve_family(family: str) -> List[ConeSpec]:
    """Cone list for a family name; ``all`` concatenates every family."""
    if family == "all":
        return [c for cones in FAMILIES.values() for c in cones]
    if family not in FAMILIES:
        raise ValueError(f"unknown cone family '{family}' (expected one of {sorted(FAMILIES)} or 'all')")
    return list(FAMILIES[family])


def run_check(check: PropertyCheck, c: ConeSpec, samples: int, rng: np.random.Generator) -> CheckResult:
    """Worst violation of one check over ``samples`` draws on one cone."""
    worst = 0.0
    errors = 0
    for _ in range(samples):
        try:
            violation = float(check.fn(c, rng))
        except McoptError as e:
            logger.debug("check_sample_error", check=check.name, cone=c.label, error=str(e))
            errors += 1
            violation = math.inf
        if not math.isfinite(violation):
            violation = math.inf
        worst = max(worst, violation)
    return CheckResult(
        name=check.name,
        family=c.label,
        samples=samples,
        worst=worst,
        tolerance=check.tolerance,
        passed=worst <= check.tolerance,
        errors=errors,
    )


def run_suite(
    family: str = "all",
    samples: int = 1000,
    seed: int = 20240101,
    checks: Optional[Sequence[str]] = None,
) -> List[CheckResult]:
    """
    Run every applicable property check on every cone of a family.

    Each (cone, check) pair draws from its own generator seeded by
    (seed, cone index, check index), so results do not depend on which
    other checks are selected.
    """
    cones = resolve_family(family)
    selected = CHECKS
    if checks is not None:
        unknown = set(checks) - {chk.name for chk in CHECKS}
        if unknown:
            raise ValueError(f"unknown checks: {sorted(unknown)}")
        selected = [chk for chk in CHECKS if chk.name in set(checks)]

    results = []
    for ci, cone in enumerate(cones):
        for ki, check in enumerate(CHECKS):
            if check not in selected or not check.covers(cone):
                continue
            rng = np.random.default_rng([seed, ci, ki])
            result = run_check(check, cone, samples, rng)
            if not result.passed:
                logger.warning(
                    "check_failed",
                    check=result.name,
                    cone=result.family,
                    worst=result.worst,
                    tolerance=result.tolerance,
                )
            results.append(result)

    logger.info(
        "suite_finished",
        family=family,
        samples=samples,
        checks=len(results),
        failed=sum(not r.passed for r in results),
    )
    return results


def summary_frame(results: Sequence[CheckResult]) -> pd.DataFrame:
    """Suite results as a table, failures first."""
    frame = pd.DataFrame([r.as_row() for r in results])
    if frame.empty:
        return frame
    return frame.sort_values(["passed", "check", "cone"], kind="stable").reset_index(drop=True)


def all_passed(results: Sequence[CheckResult]) -> bool:
    return all(r.passed for r in results)


def ensure_passed(results: Sequence[CheckResult]) -> None:
    """
    Raises:
        VerificationFailure: Naming every failed check and its cone.
    """
    failed = [f"{r.name}@{r.family}" for r in results if not r.passed]
    if failed:
        raise VerificationFailure(
            f"{len(failed)} of {len(results)} checks failed: {', '.join(failed)}",
            {"failed": failed},
        )
