"""
Problem Model

Data of the primal-dual multiconic pair

    min <c, x>  s.t.  A(x) = b,  x_i in K_i
    max <b, y>  s.t.  s_i + A_i*(y) = c_i,  s_i in K_i*

together with iterates, target-space control variables, solver
configuration and a strictly feasible random instance generator.
"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field, model_validator

from ..core import Settings, get_settings
from ..core.exceptions import DimensionMismatch, NotPositiveDefinite, RankDeficientA, ShapeMismatch
from ..core.linalg import as_sym, cholesky, min_eig_ratio
from .cones import ConeKind, ConeSpec, barrier_grad, inner, sample_interior
from .omega import omega_inv, omega_star

RANK_TOL = 1e-12

Centering = Literal["none", "per_cone", "global"]


@dataclass
class Problem:
    """
    Multiconic problem data.

    Attributes:
        cones: Cone blocks in order.
        A: Per-block constraint maps as m x dim_i matrices acting on the
            flattened block (Psd rows are flattened symmetric matrices).
        b: Right-hand side of length m.
        c: Per-block objective, cone-shaped.
    """

    cones: Tuple[ConeSpec, ...]
    A: List[np.ndarray]
    b: np.ndarray
    c: List[np.ndarray]
    check_rank: bool = True
    _stacked: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    _bases: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.cones = tuple(self.cones)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.size
        if m < 1:
            raise DimensionMismatch("problem needs at least one constraint")
        if len(self.A) != len(self.cones) or len(self.c) != len(self.cones):
            raise DimensionMismatch(
                f"{len(self.cones)} cones but {len(self.A)} A blocks and {len(self.c)} c blocks"
            )

        blocks_a, blocks_c = [], []
        for i, (cone, a_i, c_i) in enumerate(zip(self.cones, self.A, self.c)):
            a_i = np.asarray(a_i, dtype=float).reshape(m, -1) if np.size(a_i) else np.zeros((m, 0))
            if a_i.shape != (m, cone.dim):
                raise DimensionMismatch(
                    f"block {i} ({cone.label}): A has shape {a_i.shape}, expected {(m, cone.dim)}"
                )
            c_i = np.asarray(c_i, dtype=float)
            if c_i.size != cone.dim:
                raise DimensionMismatch(
                    f"block {i} ({cone.label}): c has {c_i.size} entries, expected {cone.dim}"
                )
            c_i = c_i.reshape(cone.shape)
            if cone.kind is ConeKind.PSD:
                p = cone.size
                rows = a_i.reshape(m, p, p)
                a_i = (0.5 * (rows + rows.transpose(0, 2, 1))).reshape(m, -1)
                c_i = as_sym(c_i)
            if not (np.all(np.isfinite(a_i)) and np.all(np.isfinite(c_i))):
                raise ShapeMismatch(f"block {i} ({cone.label}) has non-finite data")
            blocks_a.append(a_i)
            blocks_c.append(c_i)
        self.A = blocks_a
        self.c = blocks_c

        if self.check_rank:
            self._check_rank()

    def _check_rank(self) -> None:
        gram = as_sym(self.stacked_A @ self.stacked_A.T)
        try:
            cholesky(gram)
        except NotPositiveDefinite:
            raise RankDeficientA(f"A does not have full row rank {self.m}")
        if min_eig_ratio(gram) <= RANK_TOL:
            raise RankDeficientA(f"A does not have full row rank {self.m}")

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def n_blocks(self) -> int:
        return len(self.cones)

    @property
    def nus(self) -> np.ndarray:
        return np.array([cone.nu for cone in self.cones], dtype=float)

    @property
    def nu_total(self) -> int:
        return int(sum(cone.nu for cone in self.cones))

    @property
    def offsets(self) -> List[int]:
        out, pos = [], 0
        for cone in self.cones:
            out.append(pos)
            pos += cone.dim
        return out

    @property
    def total_dim(self) -> int:
        return sum(cone.dim for cone in self.cones)

    @property
    def stacked_A(self) -> np.ndarray:
        if self._stacked is None:
            self._stacked = np.hstack(self.A)
        return self._stacked

    @property
    def constraint_qr(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        (Q, R, Z) with A* = Q R and Z an orthonormal basis of ker A.
        """
        if self._bases is None:
            q, r = scipy.linalg.qr(self.stacked_A.T)
            self._bases = (q[:, :self.m], r[:self.m, :], q[:, self.m:])
        return self._bases

    @property
    def c_flat(self) -> np.ndarray:
        return np.concatenate([c_i.reshape(-1) for c_i in self.c])

    def apply_A(self, x: Sequence[np.ndarray]) -> np.ndarray:
        return sum(a_i @ np.asarray(x_i).reshape(-1) for a_i, x_i in zip(self.A, x))

    def apply_At(self, y: np.ndarray) -> List[np.ndarray]:
        return [(a_i.T @ y).reshape(cone.shape) for a_i, cone in zip(self.A, self.cones)]

    def dual_slack(self, y: np.ndarray) -> List[np.ndarray]:
        return [c_i - aty for c_i, aty in zip(self.c, self.apply_At(y))]

    def objective(self, x: Sequence[np.ndarray]) -> float:
        return float(sum(inner(c_i, x_i) for c_i, x_i in zip(self.c, x)))

    def primal_residual(self, x: Sequence[np.ndarray]) -> float:
        return float(np.max(np.abs(self.apply_A(x) - self.b)))

    @property
    def feas_tol(self) -> float:
        return 1e-8 * (1.0 + float(np.max(np.abs(self.b))))


@dataclass
class Iterate:
    """Primal-dual point u = (x, y, s) with s = c - A*(y)."""

    x: List[np.ndarray]
    y: np.ndarray
    s: List[np.ndarray]

    @classmethod
    def from_xy(cls, p: Problem, x: Sequence[np.ndarray], y: np.ndarray) -> "Iterate":
        x = [np.asarray(x_i, dtype=float).reshape(cone.shape) for x_i, cone in zip(x, p.cones)]
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != p.m:
            raise DimensionMismatch(f"y has {y.size} entries, expected {p.m}")
        return cls(x, y, p.dual_slack(y))

    def step(self, p: Problem, dx: Sequence[np.ndarray], dy: np.ndarray, alpha: float) -> "Iterate":
        x = [x_i + alpha * dx_i for x_i, dx_i in zip(self.x, dx)]
        return Iterate.from_xy(p, x, self.y + alpha * dy)

    def is_interior(self, p: Problem, margin: float = 0.0) -> bool:
        return all(
            cone.barrier.interior(x_i, margin) and cone.barrier.interior(s_i, margin)
            for cone, x_i, s_i in zip(p.cones, self.x, self.s)
        )


@dataclass
class ControlVars:
    """Target-space point w = (v0, v), one v_i per cone block."""

    v0: float
    v: np.ndarray

    def __post_init__(self):
        self.v0 = float(self.v0)
        self.v = np.asarray(self.v, dtype=float).reshape(-1)

    def norm_nu_sq(self, nus: np.ndarray) -> float:
        return float(np.dot(nus, self.v**2))

    def scaled(self, t: float) -> "ControlVars":
        return ControlVars(t * self.v0, t * self.v)

    def plus(self, dw: "ControlVars", alpha: float) -> "ControlVars":
        return ControlVars(self.v0 + alpha * dw.v0, self.v + alpha * dw.v)

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.v0], self.v))

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "ControlVars":
        return cls(float(vec[0]), np.asarray(vec[1:], dtype=float))


def beta2_threshold(beta1: float) -> float:
    """omega_star(omega_inv(beta1)); beta2 must lie strictly above it."""
    return omega_star(omega_inv(beta1))


class SolverConfig(BaseModel):
    """Tolerance parameters of the predictor-corrector algorithm."""

    beta1: float = Field(0.25, description="Corrector proximity threshold")
    beta2: Optional[float] = Field(None, description="Predictor proximity threshold")
    eps: float = Field(1e-6, gt=0.0, description="Stop once v0 <= eps")
    max_corrector_steps: int = Field(200, ge=1)
    max_outer_iters: int = Field(5000, ge=1)
    ls_tol: float = Field(1e-3, gt=0.0, lt=1.0, description="Relative bracket width of the predictor search")
    bisection_tol: float = Field(1e-10, gt=0.0, description="Relative tolerance of the gamma bisection")
    min_alpha: float = Field(1e-12, gt=0.0)
    verbose: bool = False

    @model_validator(mode="after")
    def check_thresholds(self) -> "SolverConfig":
        if not 0.0 < self.beta1 < 1.0 - np.log(2.0):
            raise ValueError(f"beta1 must lie in (0, 1 - ln 2), got {self.beta1}")
        threshold = beta2_threshold(self.beta1)
        if self.beta2 is None:
            self.beta2 = max(2.0, threshold + 0.5)
        elif self.beta2 <= threshold:
            raise ValueError(
                f"beta2 must exceed omega_star(omega_inv(beta1)) = {threshold:.6f}, got {self.beta2}"
            )
        return self

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides) -> "SolverConfig":
        settings = settings or get_settings()
        values = {
            "beta1": settings.beta1,
            "beta2": settings.beta2,
            "eps": settings.eps,
            "max_corrector_steps": settings.max_corrector_steps,
            "max_outer_iters": settings.max_outer_iters,
            "ls_tol": settings.ls_tol,
            "bisection_tol": settings.bisection_tol,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def duality_gap(p: Problem, u: Iterate) -> float:
    """<s, x> summed over blocks."""
    return float(sum(inner(s_i, x_i) for s_i, x_i in zip(u.s, u.x)))


def objective_gap(p: Problem, u: Iterate) -> float:
    """<c, x> - <b, y>; equals duality_gap when A(x) = b."""
    return p.objective(u.x) - float(np.dot(p.b, u.y))


def _random_rows(cone: ConeSpec, m: int, rng: np.random.Generator) -> np.ndarray:
    if cone.kind is ConeKind.PSD:
        g = rng.standard_normal((m, cone.size, cone.size))
        return (0.5 * (g + g.transpose(0, 2, 1))).reshape(m, -1)
    return rng.standard_normal((m, cone.dim))


def random_instance(
    seed: int,
    m: int,
    cones: Sequence[ConeSpec],
    centering: Centering = "none",
    max_attempts: int = 10,
) -> Tuple[Problem, Iterate]:
    """
    Strictly feasible random instance with a known interior point.

    Args:
        seed: Generator seed; output is a pure function of the arguments.
        m: Number of equality constraints.
        cones: Cone blocks.
        centering: ``per_cone`` draws s_i = -mu_i grad F(x_i), ``global``
            uses one mu for all blocks (a point of the main central path).

    Raises:
        DimensionMismatch: If the cones offer fewer than m free coordinates.
        RankDeficientA: If no full-rank A was drawn within the attempt budget.
    """
    cones = tuple(cones)
    if m < 1 or not cones:
        raise DimensionMismatch("need m >= 1 and at least one cone")
    if sum(cone.free_dim for cone in cones) < m:
        raise DimensionMismatch(
            f"{m} constraints exceed the {sum(cone.free_dim for cone in cones)} free coordinates"
        )

    rng = np.random.default_rng(seed)
    x_hat = [sample_interior(cone, rng) for cone in cones]
    if centering == "none":
        s_hat = [sample_interior(cone, rng) for cone in cones]
    elif centering == "per_cone":
        mus = rng.uniform(0.5, 2.0, size=len(cones))
        s_hat = [-mu * barrier_grad(cone, x_i) for mu, cone, x_i in zip(mus, cones, x_hat)]
    elif centering == "global":
        mu = rng.uniform(0.5, 2.0)
        s_hat = [-mu * barrier_grad(cone, x_i) for cone, x_i in zip(cones, x_hat)]
    else:
        raise ValueError(f"unknown centering {centering!r}")
    y_hat = rng.standard_normal(m)

    for attempt in range(max_attempts):
        blocks = [_random_rows(cone, m, rng) for cone in cones]
        b = sum(a_i @ x_i.reshape(-1) for a_i, x_i in zip(blocks, x_hat))
        c = [s_i + (a_i.T @ y_hat).reshape(cone.shape) for s_i, a_i, cone in zip(s_hat, blocks, cones)]
        try:
            problem = Problem(cones, blocks, b, c)
        except RankDeficientA:
            continue
        return problem, Iterate(x_hat, y_hat, problem.dual_slack(y_hat))
    raise RankDeficientA(f"no full-rank A drawn in {max_attempts} attempts")


def random_lp_instance(seed: int, m: int, n: int, centering: Centering = "none") -> Tuple[Problem, Iterate]:
    return random_instance(seed, m, [ConeSpec.nonneg()] * n, centering=centering)
