"""
Hyperbolic Coupling Barrier

For a cone K with self-scaled barrier F the coupling cone is
C(K) = {(x, s, v): x + v^2 grad F*(s) in K} and its barrier is

    Phi(x, s, v) = F(x + v^2 grad F*(s)) + F*(s)
                 = F*(s + v^2 grad F(x)) + F(x),

a 2 nu logarithmically homogeneous self-concordant barrier. Derivatives are
taken analytically from the first (primal) form; the second form is used
as an independent cross-check.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from ..core.exceptions import (
    DegenerateDirection,
    OutsideDomain,
    StencilOutsideDomain,
)
from ..core.linalg import as_sym, cholesky, solve_spd
from .cones import ConeKind, ConeSpec, inner
from . import fdcheck


class Representation(str, Enum):
    PRIMAL = "primal"
    DUAL = "dual"
    FAST = "fast"


@dataclass(frozen=True)
class CouplingPoint:
    """A point (or direction) z = (x, s, v) of one coupling block."""

    x: np.ndarray
    s: np.ndarray
    v: float

    def scaled(self, t: float) -> "CouplingPoint":
        return CouplingPoint(t * self.x, t * self.s, t * self.v)

    def plus(self, h: "CouplingPoint", t: float = 1.0) -> "CouplingPoint":
        return CouplingPoint(self.x + t * h.x, self.s + t * h.s, self.v + t * h.v)

    def flatten(self) -> np.ndarray:
        return np.concatenate((self.x.reshape(-1), self.s.reshape(-1), [self.v]))

    @classmethod
    def unflatten(cls, c: ConeSpec, vec: np.ndarray) -> "CouplingPoint":
        d = c.dim
        return cls(
            vec[:d].reshape(c.shape).copy(),
            vec[d:2 * d].reshape(c.shape).copy(),
            float(vec[2 * d]),
        )


@dataclass(frozen=True)
class CouplingGrad:
    """Gradient-shaped element (gx, gs, gv) dual to a CouplingPoint."""

    gx: np.ndarray
    gs: np.ndarray
    gv: float

    def dot(self, h: CouplingPoint) -> float:
        return inner(self.gx, h.x) + inner(self.gs, h.s) + self.gv * h.v

    def flatten(self) -> np.ndarray:
        return np.concatenate((self.gx.reshape(-1), self.gs.reshape(-1), [self.gv]))


@dataclass
class CouplingHessian:
    """Dense blocks of the coupling Hessian in flattened (x, s, v) coordinates."""

    xx: np.ndarray
    xs: np.ndarray
    ss: np.ndarray
    xv: np.ndarray
    sv: np.ndarray
    vv: float

    def full(self) -> np.ndarray:
        d = self.xx.shape[0]
        out = np.zeros((2 * d + 1, 2 * d + 1))
        out[:d, :d] = self.xx
        out[:d, d:2 * d] = self.xs
        out[d:2 * d, :d] = self.xs.T
        out[d:2 * d, d:2 * d] = self.ss
        out[:d, -1] = self.xv
        out[-1, :d] = self.xv
        out[d:2 * d, -1] = self.sv
        out[-1, d:2 * d] = self.sv
        out[-1, -1] = self.vv
        return out


def _members(c: ConeSpec, z: CouplingPoint) -> bool:
    bar = c.barrier
    x = bar.check_shape(z.x)
    s = bar.check_shape(z.s)
    return bar.interior(x, 0.0) and bar.interior(s, 0.0)


def x_bar(c: ConeSpec, z: CouplingPoint) -> np.ndarray:
    """x(z) = x + v^2 grad F*(s)."""
    return z.x + z.v**2 * c.barrier.grad(z.s)


def s_bar(c: ConeSpec, z: CouplingPoint) -> np.ndarray:
    """s(z) = s + v^2 grad F(x)."""
    return z.s + z.v**2 * c.barrier.grad(z.x)


def domain_check(c: ConeSpec, z: CouplingPoint, margin: float = 0.0) -> bool:
    """True iff x and s are interior and x(z) is interior with the margin."""
    if not _members(c, z):
        return False
    return c.barrier.interior(x_bar(c, z), margin)


def _require_domain(c: ConeSpec, z: CouplingPoint) -> np.ndarray:
    if not domain_check(c, z):
        raise OutsideDomain(
            f"point outside the coupling cone of {c.label}", condition="coupling"
        )
    return x_bar(c, z)


def phi_value(
    c: ConeSpec,
    z: CouplingPoint,
    representation: Union[Representation, str] = Representation.PRIMAL,
) -> float:
    """Coupling barrier value in the requested representation."""
    rep = Representation(representation)
    bar = c.barrier
    xb = _require_domain(c, z)

    if rep is Representation.PRIMAL:
        return bar.value(xb) + bar.value(z.s) + bar.dual_constant
    if rep is Representation.DUAL:
        sb = s_bar(c, z)
        if not bar.interior(sb, 0.0):
            raise OutsideDomain("s(z) is not interior", condition="coupling")
        return bar.value(sb) + bar.dual_constant + bar.value(z.x)

    if c.kind is ConeKind.LORENTZ:
        x, s, v2 = z.x, z.s, z.v**2
        delta = (
            bar.quad(x) * bar.quad(s)
            - 4.0 * v2 * (x[0] * s[0] + float(np.dot(x[1:], s[1:])))
            + 4.0 * v2 * v2
        )
        if delta <= 0.0:
            raise OutsideDomain("closed-form coupling determinant is not positive", condition="coupling")
        return -math.log(delta) + bar.dual_constant
    if c.kind is ConeKind.PSD:
        p = c.size
        block = np.block([[z.x, z.v * np.eye(p)], [z.v * np.eye(p), z.s]])
        factor = cholesky(block)
        return -2.0 * float(np.sum(np.log(np.diag(factor)))) - p
    raise ValueError("no closed-form coupling representation for nonneg blocks")


def phi_grad(c: ConeSpec, z: CouplingPoint) -> CouplingGrad:
    """Gradient of Phi by the chain rule on the primal representation."""
    bar = c.barrier
    xb = _require_domain(c, z)
    p = bar.grad(xb)
    g = bar.grad(z.s)
    return CouplingGrad(
        gx=p,
        gs=z.v**2 * bar.hess_apply(z.s, p) + g,
        gv=2.0 * z.v * inner(p, g),
    )


def phi_grad_dual(c: ConeSpec, z: CouplingPoint) -> CouplingGrad:
    """Gradient of Phi by the chain rule on the dual representation."""
    bar = c.barrier
    _require_domain(c, z)
    sb = s_bar(c, z)
    q = bar.grad(sb)
    g = bar.grad(z.x)
    return CouplingGrad(
        gx=z.v**2 * bar.hess_apply(z.x, q) + g,
        gs=q,
        gv=2.0 * z.v * inner(q, g),
    )


def phi_hess_apply(c: ConeSpec, z: CouplingPoint, h: CouplingPoint) -> CouplingGrad:
    """Hessian of Phi applied to a direction h = (hx, hs, hv)."""
    bar = c.barrier
    xb = _require_domain(c, z)
    v = z.v
    p = bar.grad(xb)
    g = bar.grad(z.s)
    gp = bar.hess_apply(z.s, p)

    dxb = h.x + v**2 * bar.hess_apply(z.s, h.s) + 2.0 * v * h.v * g
    hd = bar.hess_apply(xb, dxb)
    return CouplingGrad(
        gx=hd,
        gs=(
            v**2 * bar.hess_apply(z.s, hd)
            + v**2 * bar.d3(z.s, h.s, p)
            + bar.hess_apply(z.s, h.s)
            + 2.0 * v * h.v * gp
        ),
        gv=2.0 * v * inner(g, hd) + 2.0 * v * inner(gp, h.s) + 2.0 * h.v * inner(p, g),
    )


def phi_hessian_blocks(c: ConeSpec, z: CouplingPoint) -> CouplingHessian:
    """Dense Hessian blocks of Phi, consumed by the KKT assembly."""
    bar = c.barrier
    xb = _require_domain(c, z)
    v = z.v
    p = bar.grad(xb)
    hb = bar.hess_matrix(xb)
    gmat = bar.hess_matrix(z.s)
    g = bar.flatten(bar.grad(z.s))
    pf = bar.flatten(p)
    d3p = bar.d3_matrix(z.s, p)
    hbg = hb @ g
    return CouplingHessian(
        xx=hb,
        xs=v**2 * hb @ gmat,
        ss=v**4 * gmat @ hb @ gmat + v**2 * d3p + gmat,
        xv=2.0 * v * hbg,
        sv=2.0 * v * gmat @ (pf + v**2 * hbg),
        vv=2.0 * float(pf @ g) + 4.0 * v**2 * float(hbg @ g),
    )


def _sym_coordinates(c: ConeSpec) -> np.ndarray:
    q = c.barrier.sym_basis()
    d, k = q.shape
    basis = np.zeros((2 * d + 1, 2 * k + 1))
    basis[:d, :k] = q
    basis[d:2 * d, k:2 * k] = q
    basis[-1, -1] = 1.0
    return basis


def newton_decrement_sq(c: ConeSpec, z: CouplingPoint) -> float:
    """<grad Phi, (grad^2 Phi)^-1 grad Phi> on the symmetric subspace."""
    basis = _sym_coordinates(c)
    hess = as_sym(basis.T @ phi_hessian_blocks(c, z).full() @ basis)
    grad = basis.T @ phi_grad(c, z).flatten()
    return float(grad @ solve_spd(hess, grad))


def sample_coupling_point(
    c: ConeSpec,
    rng: np.random.Generator,
    low_fraction: float = 0.05,
    high_fraction: float = 0.9,
) -> CouplingPoint:
    """Interior coupling point with v^2 a random fraction of its admissible range."""
    bar = c.barrier
    x = bar.sample(rng)
    s = bar.sample(rng)
    reach = bar.max_step(s, bar.grad(x))
    v = math.sqrt(rng.uniform(low_fraction, high_fraction) * reach)
    if rng.random() < 0.5:
        v = -v
    return CouplingPoint(x, s, v)


def sc_ratio_along(
    c: ConeSpec,
    z: CouplingPoint,
    h: CouplingPoint,
    step: Optional[float] = None,
) -> float:
    """
    Self-concordance ratio D3Phi[h]^3 / (2 (D2Phi[h]^2)^(3/2)).

    The cubic term is a central difference of the exact quadratic form
    along h.

    Raises:
        DegenerateDirection: If the quadratic form vanishes along h.
    """
    _require_domain(c, z)

    def quadratic(t: float) -> float:
        zt = z.plus(h, t)
        if not domain_check(c, zt):
            raise OutsideDomain("test step left the coupling cone", condition="coupling")
        return phi_hess_apply(c, zt, h).dot(h)

    q0 = quadratic(0.0)
    if not q0 > 1e-300:
        raise DegenerateDirection("quadratic form vanishes along the test direction")

    hmax = float(np.max(np.abs(h.flatten())))
    if step is None:
        step = np.finfo(float).eps ** 0.25 * (1.0 + float(np.max(np.abs(z.flatten())))) / max(hmax, 1e-300)

    for _ in range(40):
        try:
            cubic = fdcheck.fd_grad(lambda t: quadratic(float(t[0])), np.zeros(1), h=step)[0]
            break
        except StencilOutsideDomain:
            step *= 0.5
    else:
        raise StencilOutsideDomain("no admissible test step found")

    return cubic / (2.0 * q0**1.5)
