"""
Parabolic Target-Space Solver

Predictor-corrector path following in the target space w = (v0, v):

- corrector: damped Newton on F~(., w) until the functional proximity
  Omega(u, w) = F^(u, w) - phi(w) is at most beta1;
- predictor: move along the greedy target direction dw = -w with the
  tangent step of u, taking the largest step that keeps Omega <= beta2.

The run stops once v0 <= eps, which bounds the duality gap by eps.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from ..core.exceptions import (
    CorrectorStall,
    IterLimit,
    McoptError,
    OutsideDomain,
    PredictorStall,
)
from ..core.log import get_logger
from .cones import barrier_eval, inner
from .coupling import Representation, phi_value
from .kkt import build_workspace, coupling_points, gradient, predictor_rhs, solve_direction
from .model import ControlVars, Iterate, Problem, SolverConfig, duality_gap
from .omega import omega_inv, omega_star_inv

logger = get_logger(__name__)

_HALVINGS = 60


class SolveStatus(str, Enum):
    CONVERGED = "Converged"
    ITER_LIMIT = "IterLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


class Stage(str, Enum):
    CORRECTOR = "corrector"
    PREDICTOR = "predictor"


@dataclass
class TraceRecord:
    """One accepted corrector step or predictor step."""

    iter: int
    stage: Stage
    omega: float
    v0: float
    gap: float
    mu_star: float
    decrement_or_alpha: float
    rho: float
    regularized: bool = False

    def as_row(self) -> Dict[str, Any]:
        return {
            "iter": self.iter,
            "stage": self.stage.value,
            "omega": self.omega,
            "v0": self.v0,
            "gap": self.gap,
            "mu_star": self.mu_star,
            "decrement_or_alpha": self.decrement_or_alpha,
            "rho": self.rho,
        }


@dataclass
class SolveResult:
    """
    Outcome of a solve.

    Attributes:
        iterate: Final primal-dual point.
        controls: Final target-space point.
        status: Converged, IterLimit or NumericalFailure.
        trace: Every accepted stage in order.
        predictor_steps: Number of predictor steps taken.
        corrector_steps: Number of damped Newton steps taken.
        initial_omega: Proximity of the starting pair.
        predictor_bound: Worst-case predictor count for the starting pair.
        message: Failure description, empty on success.
    """

    iterate: Iterate
    controls: ControlVars
    status: SolveStatus
    trace: List[TraceRecord] = field(default_factory=list)
    predictor_steps: int = 0
    corrector_steps: int = 0
    initial_omega: float = math.nan
    predictor_bound: float = math.nan
    message: str = ""

    @property
    def iterations(self) -> int:
        return self.predictor_steps + self.corrector_steps


@dataclass
class CorrectorOutcome:
    iterate: Iterate
    steps: int
    omega: float


@dataclass
class PredictorOutcome:
    iterate: Iterate
    controls: ControlVars
    alpha: float
    omega: float
    regularized: bool = False


# Target-space functions

def _control_slack(p: Problem, w: ControlVars) -> float:
    slack = w.v0 - w.norm_nu_sq(p.nus)
    if not slack > 0.0:
        raise OutsideDomain(
            f"v0 does not exceed |v|^2_nu (slack {slack:.3e})", condition="control"
        )
    return slack


def rho_of_w(p: Problem, w: ControlVars) -> float:
    """rho(w) = (v0 - |v|^2_nu) / (nu + 1)."""
    return _control_slack(p, w) / (p.nu_total + 1)


def phi_of_w(p: Problem, w: ControlVars) -> float:
    """Minimum of F^(., w) over the feasible set: -(nu + 1) ln rho(w) - nu."""
    return -(p.nu_total + 1) * math.log(rho_of_w(p, w)) - p.nu_total


def mu_star(p: Problem, w: ControlVars) -> float:
    """Merit function v0^2 / (v0 - |v|^2_nu)."""
    return w.v0**2 / _control_slack(p, w)


def f_hat(p: Problem, u: Iterate, w: ControlVars) -> float:
    """sum_i Phi_i(x_i, s_i, v_i) - ln(v0 - <c,x> + <b,y>)."""
    points, d = coupling_points(p, u, w)
    total = sum(phi_value(cone, z, Representation.PRIMAL) for cone, z in zip(p.cones, points))
    return total - math.log(d)


def omega_measure(p: Problem, u: Iterate, w: ControlVars) -> float:
    """Functional proximity Omega(u, w) = F^(u, w) - phi(w)."""
    reference = phi_of_w(p, w)
    return f_hat(p, u, w) - reference


@dataclass
class ClassicalProximity:
    """Omega_K(x, s) split as sum of per-block terms plus beta(x, s) >= 0."""

    total: float
    blocks: List[float]
    beta: float


def classical_proximity(p: Problem, u: Iterate) -> ClassicalProximity:
    """Distance of (x, s) to the main central path (the v = 0 target)."""
    nu = p.nu_total
    blocks = []
    barrier_sum = 0.0
    for cone, x_i, s_i in zip(p.cones, u.x, u.s):
        pair = barrier_eval(cone, s_i, "dual") + barrier_eval(cone, x_i)
        barrier_sum += pair
        blocks.append(pair + cone.nu * math.log(inner(s_i, x_i) / cone.nu) + cone.nu)
    total = barrier_sum + nu * math.log(duality_gap(p, u) / nu) + nu
    return ClassicalProximity(total, blocks, total - sum(blocks))


def predictor_floor(beta1: float, beta2: float) -> float:
    """sigma = (1 - omega_inv(beta1))^2 [omega_star_inv(beta2) - omega_inv(beta1)]."""
    r1 = omega_inv(beta1)
    return (1.0 - r1) ** 2 * (omega_star_inv(beta2) - r1)


def target_norm_sq(p: Problem, w: ControlVars) -> float:
    """Local norm of the greedy direction dw = -w at w."""
    vv = w.norm_nu_sq(p.nus)
    return (p.nu_total + 1) * (1.0 + vv**2 / _control_slack(p, w) ** 2)


def predictor_bound(p: Problem, w: ControlVars, eps: float, beta1: float, beta2: float) -> float:
    """Worst-case number of predictor steps to bring mu* below eps."""
    ratio = mu_star(p, w) / eps
    if ratio <= 1.0:
        return 0.0
    sigma = predictor_floor(beta1, beta2)
    return (1.0 + math.sqrt(p.nu_total + 1) / sigma) * math.log(ratio)


def _record(
    trace: Optional[List[TraceRecord]],
    cfg: SolverConfig,
    p: Problem,
    u: Iterate,
    w: ControlVars,
    stage: Stage,
    omega_value: float,
    measure: float,
    regularized: bool = False,
) -> None:
    if trace is None:
        return
    rec = TraceRecord(
        iter=len(trace),
        stage=stage,
        omega=omega_value,
        v0=w.v0,
        gap=duality_gap(p, u),
        mu_star=mu_star(p, w),
        decrement_or_alpha=measure,
        rho=rho_of_w(p, w),
        regularized=regularized,
    )
    trace.append(rec)
    emit = logger.info if cfg.verbose else logger.debug
    emit("solver_stage", **rec.as_row())


def corrector_stage(
    p: Problem,
    u: Iterate,
    w: ControlVars,
    cfg: SolverConfig,
    threshold: Optional[float] = None,
    trace: Optional[List[TraceRecord]] = None,
    decrement_tol: float = 0.0,
) -> CorrectorOutcome:
    """
    Damped Newton on F~(., w) until Omega(u, w) <= threshold (beta1 by default).

    Step size 1/(1 + delta) with full steps once the Newton decrement delta
    is below 1/4; a halving guard keeps every accepted step inside the domain
    and strictly decreasing in Omega.

    Raises:
        IterLimit: After cfg.max_corrector_steps steps.
        CorrectorStall: If no step decreases Omega by at least 1e-14.
    """
    limit = cfg.beta1 if threshold is None else threshold
    current = omega_measure(p, u, w)
    steps = 0
    while current > limit:
        if steps >= cfg.max_corrector_steps:
            raise IterLimit(
                f"corrector exceeded {cfg.max_corrector_steps} steps",
                {"omega": current},
            )
        ws = build_workspace(p, u, w)
        rx, ry = gradient(p, u, w)
        sol = solve_direction(ws, rx, ry)
        delta = math.sqrt(max(-(float(rx @ sol.dx) + float(ry @ sol.dy)), 0.0))
        if delta <= decrement_tol:
            break
        alpha = 1.0 if delta < 0.25 else 1.0 / (1.0 + delta)
        dx = sol.dx_blocks(p)

        candidate, value = u, math.inf
        for _ in range(_HALVINGS):
            trial = u.step(p, dx, sol.dy, alpha)
            try:
                value = omega_measure(p, trial, w)
            except OutsideDomain:
                value = math.inf
            if value < current:
                candidate = trial
                break
            alpha *= 0.5
        if not current - value >= 1e-14:
            raise CorrectorStall(
                "Newton step failed to decrease the proximity",
                {"omega": current, "decrement": delta},
            )
        u, current = candidate, value
        steps += 1
        _record(trace, cfg, p, u, w, Stage.CORRECTOR, current, delta, ws.regularized)
    return CorrectorOutcome(u, steps, current)


def recenter(
    p: Problem,
    u: Iterate,
    w: ControlVars,
    cfg: SolverConfig,
    threshold: float = 1e-12,
) -> CorrectorOutcome:
    """Drive u close to the minimizer u*(w) of F^(., w)."""
    return corrector_stage(p, u, w, cfg, threshold=threshold, decrement_tol=1e-9)


def predictor_step(p: Problem, u: Iterate, w: ControlVars, cfg: SolverConfig) -> PredictorOutcome:
    """
    One greedy predictor step dw = -w.

    The step length is the largest alpha in (0, 1] (to relative width
    ls_tol) with Omega(u + alpha du, (1 - alpha) w) <= beta2.

    Raises:
        PredictorStall: If no step of at least cfg.min_alpha is admissible.
    """
    dw = w.scaled(-1.0)
    ws = build_workspace(p, u, w)
    rx, ry = predictor_rhs(p, u, w, dw, ws)
    sol = solve_direction(ws, rx, ry)
    dx = sol.dx_blocks(p)
    accepted: Dict[float, tuple] = {}

    def admissible(alpha: float) -> bool:
        w_next = w.plus(dw, alpha)
        u_next = u.step(p, dx, sol.dy, alpha)
        try:
            value = omega_measure(p, u_next, w_next)
        except OutsideDomain:
            return False
        if value > cfg.beta2:
            return False
        accepted[alpha] = (u_next, w_next, value)
        return True

    hi, lo = 1.0, None
    alpha = 1.0
    while lo is None:
        if admissible(alpha):
            lo = alpha
            break
        hi = alpha
        alpha *= 0.5
        if alpha < cfg.min_alpha:
            raise PredictorStall("predictor step length collapsed", {"v0": w.v0})

    while hi - lo > cfg.ls_tol * lo:
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid

    u_next, w_next, value = accepted[lo]
    return PredictorOutcome(u_next, w_next, lo, value, ws.regularized)


def solve(p: Problem, u_start: Iterate, w_start: ControlVars, cfg: SolverConfig) -> SolveResult:
    """
    Run the predictor-corrector method until v0 <= cfg.eps.

    Numerical failures are reported through the result status rather than
    raised.
    """
    trace: List[TraceRecord] = []
    u, w = u_start, w_start
    current = omega_measure(p, u, w)
    result = SolveResult(
        iterate=u,
        controls=w,
        status=SolveStatus.ITER_LIMIT,
        trace=trace,
        initial_omega=current,
    )
    logger.info(
        "solve_start",
        blocks=p.n_blocks,
        m=p.m,
        nu=p.nu_total,
        omega=current,
        v0=w.v0,
        mu_star=mu_star(p, w),
    )

    outer = 0
    try:
        result.predictor_bound = predictor_bound(p, w, cfg.eps, cfg.beta1, cfg.beta2)
        while w.v0 > cfg.eps:
            if outer >= cfg.max_outer_iters:
                raise IterLimit(f"outer iteration budget {cfg.max_outer_iters} exhausted")
            outer += 1
            if current > cfg.beta1:
                stage = corrector_stage(p, u, w, cfg, trace=trace)
                u, current = stage.iterate, stage.omega
                result.corrector_steps += stage.steps
            else:
                step = predictor_step(p, u, w, cfg)
                u, w, current = step.iterate, step.controls, step.omega
                result.predictor_steps += 1
                _record(trace, cfg, p, u, w, Stage.PREDICTOR, current, step.alpha, step.regularized)
            result.iterate, result.controls = u, w
        result.status = SolveStatus.CONVERGED
    except IterLimit as e:
        result.status = SolveStatus.ITER_LIMIT
        result.message = str(e)
    except McoptError as e:
        result.status = SolveStatus.NUMERICAL_FAILURE
        result.message = f"{type(e).__name__}: {str(e)}"
    except np.linalg.LinAlgError as e:
        result.status = SolveStatus.NUMERICAL_FAILURE
        result.message = f"LinAlgError: {str(e)}"

    result.iterate, result.controls = u, w
    log = logger.info if result.status is SolveStatus.CONVERGED else logger.warning
    log(
        "solve_finished",
        status=result.status.value,
        predictor_steps=result.predictor_steps,
        corrector_steps=result.corrector_steps,
        v0=w.v0,
        gap=duality_gap(p, u),
        message=result.message,
    )
    return result
