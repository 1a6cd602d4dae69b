"""
Symmetric Cone Barriers

Barrier oracles for the three supported self-scaled cone families:
the nonnegative ray, the Lorentz (second-order) cone and the cone of
positive semidefinite matrices. Each family provides the value, gradient,
Hessian and inverse-Hessian actions, third and fourth derivative forms,
interior membership, boundary steps and the Nesterov-Todd scaling point.

Points are numpy arrays: shape (1,) for NonNeg, (n+1,) for Lorentz and
(p, p) for Psd. Inner products are ``np.vdot``, which for symmetric
matrices equals trace(S X).
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
import scipy.linalg

from ..core.exceptions import (
    NoConvergence,
    NotPositiveDefinite,
    OutsideDomain,
    ScalingResidualTooLarge,
    ShapeMismatch,
    TargetBelowZetaZero,
)
from ..core.linalg import as_sym, cholesky, is_positive_definite, sym_eig, sym_funcs
from ..core.log import get_logger

logger = get_logger(__name__)

SCALING_RESIDUAL_TOL = 1e-9
ZETA_TOL = 1e-10


class ConeKind(str, Enum):
    NONNEG = "nonneg"
    LORENTZ = "lorentz"
    PSD = "psd"


class Side(str, Enum):
    PRIMAL = "primal"
    DUAL = "dual"


@dataclass(frozen=True)
class ConeSpec:
    """
    One cone block of a multiconic problem.

    Attributes:
        kind: Cone family.
        size: 1 for NonNeg, the spatial dimension n for Lorentz (total
            dimension n + 1), the matrix order p for Psd.
    """

    kind: ConeKind
    size: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ConeKind(self.kind))
        if self.kind is ConeKind.NONNEG and self.size != 1:
            raise ShapeMismatch("NonNeg blocks are one-dimensional")
        if self.size < 1:
            raise ShapeMismatch(f"{self.kind.value} block needs size >= 1, got {self.size}")

    @classmethod
    def nonneg(cls) -> "ConeSpec":
        return cls(ConeKind.NONNEG, 1)

    @classmethod
    def lorentz(cls, n: int) -> "ConeSpec":
        return cls(ConeKind.LORENTZ, n)

    @classmethod
    def psd(cls, p: int) -> "ConeSpec":
        return cls(ConeKind.PSD, p)

    @property
    def nu(self) -> int:
        if self.kind is ConeKind.NONNEG:
            return 1
        if self.kind is ConeKind.LORENTZ:
            return 2
        return self.size

    @property
    def shape(self) -> Tuple[int, ...]:
        if self.kind is ConeKind.NONNEG:
            return (1,)
        if self.kind is ConeKind.LORENTZ:
            return (self.size + 1,)
        return (self.size, self.size)

    @property
    def dim(self) -> int:
        """Length of the flattened representation."""
        return int(np.prod(self.shape))

    @property
    def free_dim(self) -> int:
        """Number of independent coordinates (symmetric part for Psd)."""
        if self.kind is ConeKind.PSD:
            return self.size * (self.size + 1) // 2
        return self.dim

    @property
    def label(self) -> str:
        if self.kind is ConeKind.NONNEG:
            return "nonneg"
        if self.kind is ConeKind.LORENTZ:
            return f"lorentz({self.size + 1})"
        return f"psd({self.size})"

    @property
    def barrier(self) -> "SymmetricConeBarrier":
        return barrier_for(self)


ConePoint = np.ndarray


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean / trace inner product of two cone-shaped arrays."""
    return float(np.vdot(a, b))


class SymmetricConeBarrier(ABC):
    """Oracle for the standard logarithmically homogeneous barrier of one cone."""

    def __init__(self, spec: ConeSpec):
        self.spec = spec

    @property
    def nu(self) -> int:
        return self.spec.nu

    def check_shape(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.shape != self.spec.shape:
            raise ShapeMismatch(
                f"{self.spec.label} expects shape {self.spec.shape}, got {arr.shape}"
            )
        return arr

    def require_interior(self, x) -> np.ndarray:
        arr = self.check_shape(x)
        if not self.interior(arr, 0.0):
            raise OutsideDomain(f"point is not interior to {self.spec.label}")
        return arr

    def flatten(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(-1)

    def unflatten(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float).reshape(self.spec.shape)

    def sym_basis(self) -> np.ndarray:
        return np.eye(self.spec.dim)

    def random_direction(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.spec.shape)

    @property
    @abstractmethod
    def dual_constant(self) -> float:
        """Additive constant of the conjugate barrier."""

    @abstractmethod
    def interior(self, x: np.ndarray, margin: float) -> bool:
        ...

    @abstractmethod
    def value(self, x: np.ndarray) -> float:
        ...

    @abstractmethod
    def grad(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def hess_apply(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def hess_inv_apply(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def d3(self, x: np.ndarray, h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def d4(self, x: np.ndarray, h: np.ndarray, q: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def raw_scaling_point(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def max_step(self, x: np.ndarray, d: np.ndarray) -> float:
        """sup{t >= 0 : x + t d interior}, possibly infinite."""

    @abstractmethod
    def boundary_slack(self, x: np.ndarray) -> float:
        ...

    @abstractmethod
    def hess_matrix(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def hess_inv_matrix(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def distinguished_point(self) -> np.ndarray:
        ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, low: float = 0.5, high: float = 2.0) -> np.ndarray:
        ...

    def d3_matrix(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        """Matrix of the linear map q -> D3F(x)[q, h] in flattened coordinates."""
        n = self.spec.dim
        out = np.empty((n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            out[:, k] = self.flatten(self.d3(x, self.unflatten(e), h))
        return out


class NonNegBarrier(SymmetricConeBarrier):
    """F(x) = -ln x on the nonnegative ray."""

    dual_constant = -1.0

    def interior(self, x, margin):
        return bool(x[0] > margin)

    def value(self, x):
        return -math.log(x[0])

    def grad(self, x):
        return -1.0 / x

    def hess_apply(self, x, h):
        return h / x**2

    def hess_inv_apply(self, x, g):
        return x**2 * g

    def d3(self, x, h1, h2):
        return -2.0 * h1 * h2 / x**3

    def d4(self, x, h, q):
        return 6.0 * h * q**2 / x**4

    def raw_scaling_point(self, x, s):
        return np.sqrt(x / s)

    def max_step(self, x, d):
        if d[0] >= 0.0:
            return math.inf
        return float(-x[0] / d[0])

    def boundary_slack(self, x):
        return float(x[0])

    def hess_matrix(self, x):
        return np.array([[1.0 / x[0] ** 2]])

    def hess_inv_matrix(self, x):
        return np.array([[x[0] ** 2]])

    def distinguished_point(self):
        return np.ones(1)

    def sample(self, rng, low=0.5, high=2.0):
        return np.array([rng.uniform(low, high)])


@dataclass
class LorentzScaling:
    """Intermediate quantities of the closed-form Lorentz scaling point."""

    alpha: float
    beta: float
    tau: float
    delta: float
    f_alpha: float
    w: np.ndarray


class LorentzBarrier(SymmetricConeBarrier):
    """F(x) = -ln(x0^2 - |x1|^2) on the second-order cone."""

    dual_constant = -2.0 + 2.0 * math.log(2.0)

    @staticmethod
    def reflect(x):
        jx = np.array(x, dtype=float, copy=True)
        jx[1:] *= -1.0
        return jx

    @staticmethod
    def quad(x) -> float:
        # (x0 - |x1|)(x0 + |x1|) keeps relative accuracy near the boundary
        r = float(np.linalg.norm(x[1:]))
        return (x[0] - r) * (x[0] + r)

    def interior(self, x, margin):
        return bool(x[0] - np.linalg.norm(x[1:]) > margin)

    def value(self, x):
        return -math.log(self.quad(x))

    def grad(self, x):
        return -2.0 * self.reflect(x) / self.quad(x)

    def hess_apply(self, x, h):
        a = self.reflect(x)
        w = self.quad(x)
        return -2.0 * self.reflect(h) / w + 4.0 * a * np.dot(a, h) / w**2

    def hess_inv_apply(self, x, g):
        return x * np.dot(x, g) - 0.5 * self.quad(x) * self.reflect(g)

    def d3(self, x, h1, h2):
        a = self.reflect(x)
        w = self.quad(x)
        ah1 = np.dot(a, h1)
        ah2 = np.dot(a, h2)
        hjh = np.dot(h1, self.reflect(h2))
        return (
            4.0 * (ah2 * self.reflect(h1) + ah1 * self.reflect(h2) + hjh * a) / w**2
            - 16.0 * ah1 * ah2 * a / w**3
        )

    def d4(self, x, h, q):
        a = self.reflect(x)
        w = self.quad(x)
        jq = self.reflect(q)
        jh = self.reflect(h)
        alpha = np.dot(a, q)
        beta = np.dot(a, h)
        kappa = np.dot(q, jq)
        eta = np.dot(q, jh)
        return (
            8.0 * eta * jq / w**2
            - 32.0 * alpha * beta * jq / w**3
            + 4.0 * kappa * jh / w**2
            - 16.0 * kappa * beta * a / w**3
            - 32.0 * alpha * eta * a / w**3
            - 16.0 * alpha**2 * jh / w**3
            + 96.0 * alpha**2 * beta * a / w**4
        )

    def scaling_parameters(self, x, s) -> LorentzScaling:
        sx = float(np.dot(s, x))
        wx = self.quad(x)
        ws = self.quad(s)
        nx = float(np.linalg.norm(x[1:]))
        ns = float(np.linalg.norm(s[1:]))
        ip = float(np.dot(x[1:], s[1:]))
        # <s,x>^2 - w_x w_s as a sum of two nonnegative terms
        delta = (nx * ns + ip) * (2.0 * x[0] * s[0] - nx * ns + ip) + (x[0] * ns - s[0] * nx) ** 2
        delta = max(delta, 0.0)

        alpha = sx / (sx + math.sqrt(wx * ws))
        beta = (sx / ws) * (1.0 - alpha)
        f_alpha = (sx**2 - alpha * delta) / (sx**2 - alpha**2 * delta)

        w_star = alpha * x + beta * self.reflect(s)
        tau = math.sqrt(np.dot(-self.grad(w_star), x) / sx)
        return LorentzScaling(alpha, beta, tau, delta, f_alpha, tau * w_star)

    def raw_scaling_point(self, x, s):
        return self.scaling_parameters(x, s).w

    def max_step(self, x, d):
        # smallest positive root of quad(x + t d) = A t^2 + 2 B t + C
        qa = float(np.dot(d, self.reflect(d)))
        qb = float(np.dot(x, self.reflect(d)))
        qc = self.quad(x)
        disc = qb * qb - qa * qc
        if disc < 0.0:
            return math.inf
        root = math.sqrt(disc)
        q = -(qb + math.copysign(root, qb))
        roots = []
        if qa != 0.0:
            roots.append(q / qa)
        if q != 0.0:
            roots.append(qc / q)
        positive = [r for r in roots if r > 0.0 and math.isfinite(r)]
        return min(positive) if positive else math.inf

    def boundary_slack(self, x):
        return float(x[0] - np.linalg.norm(x[1:]))

    def hess_matrix(self, x):
        a = self.reflect(x)
        w = self.quad(x)
        jmat = np.diag(self.reflect(np.ones(self.spec.dim)))
        return -2.0 * jmat / w + 4.0 * np.outer(a, a) / w**2

    def hess_inv_matrix(self, x):
        jmat = np.diag(self.reflect(np.ones(self.spec.dim)))
        return np.outer(x, x) - 0.5 * self.quad(x) * jmat

    def distinguished_point(self):
        e = np.zeros(self.spec.dim)
        e[0] = 1.0
        return e

    def sample(self, rng, low=0.5, high=2.0):
        x1 = rng.standard_normal(self.spec.size)
        x0 = np.linalg.norm(x1) + rng.uniform(low, high)
        return np.concatenate(([x0], x1))


class PsdBarrier(SymmetricConeBarrier):
    """F(X) = -ln det X on positive semidefinite matrices."""

    @property
    def dual_constant(self):
        return -float(self.spec.size)

    def interior(self, x, margin):
        return is_positive_definite(x, margin)

    def value(self, x):
        factor = cholesky(x)
        return -2.0 * float(np.sum(np.log(np.diag(factor))))

    def _inv(self, x):
        try:
            return sym_funcs(x, "inv")
        except NotPositiveDefinite as e:
            raise OutsideDomain(f"matrix is not interior: {str(e)}")

    def grad(self, x):
        return -self._inv(x)

    def hess_apply(self, x, h):
        xi = self._inv(x)
        return xi @ h @ xi

    def hess_inv_apply(self, x, g):
        return x @ g @ x

    def d3(self, x, h1, h2):
        xi = self._inv(x)
        a = xi @ h1 @ xi
        b = xi @ h2 @ xi
        return -(a @ h2 @ xi + b @ h1 @ xi)

    def d4(self, x, h, q):
        xi = self._inv(x)
        hx = xi @ h
        qx = xi @ q
        return 2.0 * (hx @ qx @ qx + qx @ hx @ qx + qx @ qx @ hx) @ xi

    def raw_scaling_point(self, x, s):
        try:
            root = sym_funcs(x, "sqrt")
            middle = sym_funcs(root @ s @ root, "inv_sqrt")
        except NotPositiveDefinite as e:
            raise OutsideDomain(f"scaling point of non-interior pair: {str(e)}")
        return as_sym(root @ middle @ root)

    def max_step(self, x, d):
        factor = cholesky(x)
        t = scipy.linalg.solve_triangular(factor, d, lower=True)
        k = scipy.linalg.solve_triangular(factor, t.T, lower=True)
        lam, _ = sym_eig(k)
        if lam[0] >= 0.0:
            return math.inf
        return float(-1.0 / lam[0])

    def boundary_slack(self, x):
        return float(sym_eig(x)[0][0])

    def hess_matrix(self, x):
        xi = self._inv(x)
        return np.kron(xi, xi)

    def hess_inv_matrix(self, x):
        return np.kron(x, x)

    def distinguished_point(self):
        return np.eye(self.spec.size)

    def sym_basis(self):
        p = self.spec.size
        cols = []
        for i in range(p):
            for j in range(i, p):
                e = np.zeros((p, p))
                if i == j:
                    e[i, i] = 1.0
                else:
                    e[i, j] = e[j, i] = 1.0 / math.sqrt(2.0)
                cols.append(e.reshape(-1))
        return np.column_stack(cols)

    def random_direction(self, rng):
        g = rng.standard_normal(self.spec.shape)
        return 0.5 * (g + g.T)

    def sample(self, rng, low=0.5, high=2.0):
        p = self.spec.size
        q, r = np.linalg.qr(rng.standard_normal((p, p)))
        q = q * np.sign(np.where(np.diag(r) == 0.0, 1.0, np.diag(r)))
        d = rng.uniform(low, high, size=p)
        return as_sym((q * d) @ q.T)


_BARRIERS = {
    ConeKind.NONNEG: NonNegBarrier,
    ConeKind.LORENTZ: LorentzBarrier,
    ConeKind.PSD: PsdBarrier,
}


@lru_cache(maxsize=None)
def barrier_for(spec: ConeSpec) -> SymmetricConeBarrier:
    return _BARRIERS[spec.kind](spec)


def _side(side: Union[Side, str]) -> Side:
    return Side(side)


# Public oracle functions

def membership_interior(c: ConeSpec, x, margin: float = 0.0) -> bool:
    """True iff x lies in the interior of the cone with the given margin."""
    bar = c.barrier
    return bar.interior(bar.check_shape(x), margin)


def barrier_eval(c: ConeSpec, x, side: Union[Side, str] = Side.PRIMAL) -> float:
    bar = c.barrier
    x = bar.require_interior(x)
    value = bar.value(x)
    if _side(side) is Side.DUAL:
        value += bar.dual_constant
    return value


def barrier_grad(c: ConeSpec, x, side: Union[Side, str] = Side.PRIMAL) -> np.ndarray:
    _side(side)
    bar = c.barrier
    return bar.grad(bar.require_interior(x))


def hess_apply(c: ConeSpec, x, h, side: Union[Side, str] = Side.PRIMAL) -> np.ndarray:
    _side(side)
    bar = c.barrier
    return bar.hess_apply(bar.require_interior(x), bar.check_shape(h))


def hess_inv_apply(c: ConeSpec, x, g, side: Union[Side, str] = Side.PRIMAL) -> np.ndarray:
    _side(side)
    bar = c.barrier
    return bar.hess_inv_apply(bar.require_interior(x), bar.check_shape(g))


def d3_form(c: ConeSpec, x, h1, h2, side: Union[Side, str] = Side.PRIMAL) -> np.ndarray:
    """D3F(x)[h1, h2] as an element of the dual space."""
    _side(side)
    bar = c.barrier
    return bar.d3(bar.require_interior(x), bar.check_shape(h1), bar.check_shape(h2))


def d4_form(c: ConeSpec, x, h, q, side: Union[Side, str] = Side.PRIMAL) -> np.ndarray:
    """D4F(x)[h][q, q] as an element of the dual space."""
    _side(side)
    bar = c.barrier
    return bar.d4(bar.require_interior(x), bar.check_shape(h), bar.check_shape(q))


def dual_constant(c: ConeSpec) -> float:
    return c.barrier.dual_constant


def max_step(c: ConeSpec, x, d) -> float:
    bar = c.barrier
    return bar.max_step(bar.require_interior(x), bar.check_shape(d))


def boundary_slack(c: ConeSpec, x) -> float:
    bar = c.barrier
    return bar.boundary_slack(bar.check_shape(x))


def hess_matrix(c: ConeSpec, x) -> np.ndarray:
    bar = c.barrier
    return bar.hess_matrix(bar.require_interior(x))


def hess_inv_matrix(c: ConeSpec, x) -> np.ndarray:
    bar = c.barrier
    return bar.hess_inv_matrix(bar.require_interior(x))


def distinguished_point(c: ConeSpec) -> np.ndarray:
    return c.barrier.distinguished_point()


def sample_interior(c: ConeSpec, rng: np.random.Generator, low: float = 0.5, high: float = 2.0) -> np.ndarray:
    return c.barrier.sample(rng, low, high)


def local_norm(c: ConeSpec, x, h) -> float:
    """||h||_x = <grad^2 F(x) h, h>^(1/2)."""
    return math.sqrt(max(inner(hess_apply(c, x, h), h), 0.0))


def lorentz_scaling_parameters(x, s) -> LorentzScaling:
    """Closed-form scaling quantities for a Lorentz pair."""
    x = np.asarray(x, dtype=float)
    spec = ConeSpec.lorentz(x.shape[0] - 1)
    bar = spec.barrier
    return bar.scaling_parameters(bar.require_interior(x), bar.require_interior(s))


def scaling_point(c: ConeSpec, x, s) -> np.ndarray:
    """
    Scaling point w with s = grad^2 F(w) x.

    Raises:
        OutsideDomain: If x or s is not interior.
        ScalingResidualTooLarge: If the residual check fails.
    """
    bar = c.barrier
    x = bar.require_interior(x)
    s = bar.require_interior(s)
    w = bar.raw_scaling_point(x, s)
    residual = float(np.linalg.norm(s - bar.hess_apply(w, x)))
    bound = SCALING_RESIDUAL_TOL * (1.0 + float(np.linalg.norm(s)))
    if not np.isfinite(residual) or residual > bound:
        raise ScalingResidualTooLarge(
            f"scaling point residual {residual:.3e} exceeds {bound:.3e}",
            {"cone": c.label, "residual": residual},
        )
    return w


def zeta(c: ConeSpec, x, s, tau: float) -> float:
    """zeta(tau) = <grad F(x), grad F*(s + tau grad F(x))>."""
    g = barrier_grad(c, x)
    point = np.asarray(s, dtype=float) + tau * g
    if not membership_interior(c, point):
        raise OutsideDomain(
            f"s + tau grad F(x) left the dual cone at tau={tau}", condition="zeta"
        )
    return inner(g, c.barrier.grad(point))


def zeta_prime(c: ConeSpec, x, s, tau: float) -> float:
    g = barrier_grad(c, x)
    point = np.asarray(s, dtype=float) + tau * g
    if not membership_interior(c, point):
        raise OutsideDomain(
            f"s + tau grad F(x) left the dual cone at tau={tau}", condition="zeta"
        )
    return inner(g, c.barrier.hess_apply(point, g))


def zeta_solve(c: ConeSpec, x, s, target: float, max_iter: int = 200) -> float:
    """
    Unique root of zeta(tau) = target on [0, tau_max).

    Safeguarded Newton on 1/zeta, which is affine for centered pairs,
    with bisection whenever an iterate leaves the current bracket.

    Raises:
        TargetBelowZetaZero: If target <= zeta(0).
        NoConvergence: If the residual target is not reached.
    """
    z0 = zeta(c, x, s, 0.0)
    if target <= z0:
        raise TargetBelowZetaZero(
            f"target {target:.6e} is not above zeta(0) = {z0:.6e}",
            {"cone": c.label},
        )
    g = barrier_grad(c, x)
    lo, hi = 0.0, max_step(c, s, g)
    tau = 0.0
    z = z0
    for _ in range(max_iter):
        if abs(z - target) <= 1e-2 * ZETA_TOL * target:
            return tau
        if z < target:
            lo = tau
        else:
            hi = tau
        slope = zeta_prime(c, x, s, tau)
        candidate = tau + z * (target - z) / (target * slope) if slope > 0.0 else math.nan
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi)
        if candidate == tau or hi - lo <= 1e-16 * hi:
            break
        try:
            z = zeta(c, x, s, candidate)
        except OutsideDomain:
            # rounding put the iterate on the boundary side
            hi = candidate
            candidate = 0.5 * (lo + hi)
            z = zeta(c, x, s, candidate)
        tau = candidate

    if abs(z - target) > ZETA_TOL * target:
        raise NoConvergence(
            f"zeta_solve residual {abs(z - target):.3e} above tolerance",
            {"cone": c.label, "tau": tau, "target": target},
        )
    return tau
