"""
KKT Systems

Assembly and solution of the Newton (corrector) and predictor systems of
the barrier F~(x, y) = sum_i Phi_i(x_i, c_i - A_i* y, v_i) - ln d with
d = v0 - <c, x> + <b, y>, subject to A x = b.

H_xx is block diagonal plus a rank-one term and is inverted with
Sherman-Morrison. Directions are computed on ker A: the Hessian of F~ is
whitened blockwise as B.T B and a QR of B yields the reduced m x m
y-matrix as a Gram product, next to the QR factor of A*. No difference
of H_xx^-1 terms is ever formed.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from ..core.exceptions import (
    NoConvergence,
    NotPositiveDefinite,
    OutsideDomain,
    SingularBlock,
    SingularReduced,
)
from ..core.linalg import SpdFactor, as_sym, gram_root, pd_tol
from ..core.log import get_logger
from .coupling import CouplingHessian, CouplingPoint, domain_check, phi_grad, phi_hessian_blocks, x_bar
from .cones import ConeKind, ConeSpec, hess_inv_matrix
from .model import ControlVars, Iterate, Problem, objective_gap

logger = get_logger(__name__)

REGULARIZATION = 1e-12

BlockVec = Union[np.ndarray, Sequence[np.ndarray]]


def coupling_points(p: Problem, u: Iterate, w: ControlVars) -> Tuple[List[CouplingPoint], float]:
    """
    Per-block coupling points and the gap slack d = v0 - <c,x> + <b,y>.

    Raises:
        OutsideDomain: With ``condition`` naming the failed requirement.
    """
    if w.v.size != p.n_blocks:
        raise OutsideDomain(
            f"control vector has {w.v.size} entries for {p.n_blocks} blocks", condition="control"
        )
    points = []
    for i, (cone, x_i, s_i, v_i) in enumerate(zip(p.cones, u.x, u.s, w.v)):
        z = CouplingPoint(x_i, s_i, float(v_i))
        if not domain_check(cone, z):
            raise OutsideDomain(f"block {i} ({cone.label}) left the coupling cone", condition=f"coupling[{i}]")
        points.append(z)
    d = w.v0 - objective_gap(p, u)
    if not d > 0.0:
        raise OutsideDomain(f"v0 does not exceed the objective gap (slack {d:.3e})", condition="target_gap")
    return points, d


def gradient(p: Problem, u: Iterate, w: ControlVars) -> Tuple[np.ndarray, np.ndarray]:
    """Gradient (grad_x F~, grad_y F~) in flattened coordinates."""
    points, d = coupling_points(p, u, w)
    grads = [phi_grad(cone, z) for cone, z in zip(p.cones, points)]
    rx = np.concatenate([g.gx.reshape(-1) for g in grads]) + p.c_flat / d
    ry = -sum(a_i @ g.gs.reshape(-1) for a_i, g in zip(p.A, grads)) - p.b / d
    return rx, ry


@dataclass
class KktSolution:
    dx: np.ndarray
    dy: np.ndarray
    dlam: np.ndarray

    def dx_blocks(self, p: Problem) -> List[np.ndarray]:
        return [self.dx[o:o + cone.dim].reshape(cone.shape) for o, cone in zip(p.offsets, p.cones)]


@dataclass
class HxxOperator:
    """Block-diagonal-plus-rank-one H_xx with its Sherman-Morrison inverse."""

    offsets: List[int]
    blocks: List[np.ndarray]
    inverses: List[np.ndarray]
    rank_one: np.ndarray

    def __post_init__(self):
        self.rank_one_image = self._blockwise(self.inverses, self.rank_one)
        self.denominator = 1.0 + float(self.rank_one @ self.rank_one_image)

    def _blockwise(self, mats: Sequence[np.ndarray], g: np.ndarray) -> np.ndarray:
        out = np.empty_like(g, dtype=float)
        for o, mat in zip(self.offsets, mats):
            k = mat.shape[0]
            out[o:o + k] = mat @ g[o:o + k]
        return out

    def apply(self, g: np.ndarray) -> np.ndarray:
        base = self._blockwise(self.blocks, g)
        return base + np.multiply.outer(self.rank_one, self.rank_one @ g)

    def solve(self, g: np.ndarray) -> np.ndarray:
        t = self._blockwise(self.inverses, g)
        return t - np.multiply.outer(self.rank_one_image, self.rank_one @ t) / self.denominator

    def dense(self) -> np.ndarray:
        n = sum(b.shape[0] for b in self.blocks)
        out = np.zeros((n, n))
        for o, b in zip(self.offsets, self.blocks):
            k = b.shape[0]
            out[o:o + k, o:o + k] = b
        return out + np.outer(self.rank_one, self.rank_one)



@dataclass
class KktWorkspace:
    """
    Factorizations bound to one evaluation point (u, w).

    The Hessian of F~ on ker A x R^m is kept as R.T @ R with R upper
    triangular from a QR of the whitened Hessian, split as
    [[r11, r12], [0, r22]]; r22.T @ r22 is the reduced y-matrix.
    """

    problem: Problem
    d: float
    hessians: List[CouplingHessian]
    hxx: HxxOperator
    hxy: np.ndarray
    hyy: np.ndarray
    r11: np.ndarray
    r12: np.ndarray
    reduced: SpdFactor
    regularized: bool = False


def hxx_inv_apply(ws: KktWorkspace, g: BlockVec) -> BlockVec:
    """H_xx^-1 g by block inverses and one Sherman-Morrison correction."""
    if isinstance(g, np.ndarray):
        return ws.hxx.solve(np.asarray(g, dtype=float))
    flat = np.concatenate([np.asarray(b, dtype=float).reshape(-1) for b in g])
    return KktSolution(ws.hxx.solve(flat), np.zeros(0), np.zeros(0)).dx_blocks(ws.problem)


def _block_inverse(cone: ConeSpec, z: CouplingPoint) -> np.ndarray:
    try:
        inv = hess_inv_matrix(cone, x_bar(cone, z))
    except (NotPositiveDefinite, NoConvergence, np.linalg.LinAlgError) as e:
        raise SingularBlock(f"{cone.label} Hessian block is singular: {str(e)}")
    if not np.all(np.isfinite(inv)):
        raise SingularBlock(f"{cone.label} inverse Hessian has non-finite entries")
    return inv


def whitened_hessian(p: Problem, hessians: Sequence[CouplingHessian], d: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Column blocks (B_x, B_y) with B.T @ B the Hessian of F~ in (x, y).

    Each cone contributes the Gram root of its (x, s) coupling Hessian
    composed with s_i = c_i - A_i* y; the last row is the gradient of d
    over d.

    Raises:
        SingularBlock: If a coupling Hessian block is indefinite.
    """
    n = p.total_dim
    rows_x, rows_y = [], []
    for cone, o, h, a_i in zip(p.cones, p.offsets, hessians, p.A):
        k = cone.dim
        try:
            root = gram_root(np.block([[h.xx, h.xs], [h.xs.T, h.ss]]))
        except (NotPositiveDefinite, NoConvergence) as e:
            raise SingularBlock(f"{cone.label} coupling Hessian is not positive semidefinite: {str(e)}")
        bx = np.zeros((2 * k, n))
        bx[:, o:o + k] = root[:, :k]
        rows_x.append(bx)
        rows_y.append(-root[:, k:] @ a_i.T)
    rows_x.append((-p.c_flat / d)[None, :])
    rows_y.append((p.b / d)[None, :])
    return np.vstack(rows_x), np.vstack(rows_y)


def _pivots_ok(r: np.ndarray) -> bool:
    if r.shape[0] == 0:
        return True
    column_sq = np.sum(r * r, axis=0)
    return float(np.min(np.diag(r) ** 2)) > pd_tol() * float(np.max(column_sq))


def _reduced_factor(r22: np.ndarray) -> Tuple[SpdFactor, bool]:
    if _pivots_ok(r22):
        return SpdFactor(r22.T.copy()), False
    mat = as_sym(r22.T @ r22)
    m = mat.shape[0]
    shift = REGULARIZATION * float(np.trace(mat)) / m
    logger.warning("reduced_matrix_regularized", shift=shift, m=m)
    try:
        return SpdFactor.of(mat + shift * np.eye(m)), True
    except NotPositiveDefinite as e:
        raise SingularReduced(f"reduced y-matrix is not positive definite: {str(e)}")


def build_workspace(p: Problem, u: Iterate, w: ControlVars) -> KktWorkspace:
    """
    Assemble block Hessians and the reduced y-matrix at (u, w).

    Raises:
        OutsideDomain: If (u, w) is outside the barrier domain.
        SingularBlock: If a per-cone Hessian block cannot be inverted or
            factored.
        SingularReduced: If the restricted x-Hessian is singular, or the
            reduced matrix stays singular after one regularization retry.
    """
    points, d = coupling_points(p, u, w)
    hessians = [phi_hessian_blocks(cone, z) for cone, z in zip(p.cones, points)]
    hxx = HxxOperator(
        offsets=p.offsets,
        blocks=[h.xx for h in hessians],
        inverses=[_block_inverse(cone, z) for cone, z in zip(p.cones, points)],
        rank_one=p.c_flat / d,
    )

    # every y-derivative is -A applied to the matching s-derivative
    hxy = np.vstack([-h.xs @ a_i.T for h, a_i in zip(hessians, p.A)]) - np.outer(p.c_flat, p.b) / d**2
    hyy = as_sym(sum(a_i @ h.ss @ a_i.T for h, a_i in zip(hessians, p.A)) + np.outer(p.b, p.b) / d**2)

    _, _, null_basis = p.constraint_qr
    bx, by = whitened_hessian(p, hessians, d)
    _, r = scipy.linalg.qr(np.hstack([bx @ null_basis, by]), mode="economic")
    r = r * np.where(np.diag(r) < 0.0, -1.0, 1.0)[:, None]
    k = null_basis.shape[1]
    r11, r12, r22 = r[:k, :k], r[:k, k:], r[k:, k:]
    if not _pivots_ok(r11):
        raise SingularReduced("Hessian restricted to ker A is singular")
    reduced, regularized = _reduced_factor(r22)

    return KktWorkspace(
        problem=p,
        d=d,
        hessians=hessians,
        hxx=hxx,
        hxy=hxy,
        hyy=hyy,
        r11=r11,
        r12=r12,
        reduced=reduced,
        regularized=regularized,
    )


def _upper_solve(r: np.ndarray, rhs: np.ndarray, transpose: bool = False) -> np.ndarray:
    if r.shape[0] == 0:
        return np.zeros(0)
    return scipy.linalg.solve_triangular(r, rhs, trans="T" if transpose else "N", lower=False)


def _symmetrize_psd(p: Problem, dx: np.ndarray) -> np.ndarray:
    for o, cone in zip(p.offsets, p.cones):
        if cone.kind is ConeKind.PSD:
            block = dx[o:o + cone.dim].reshape(cone.shape)
            dx[o:o + cone.dim] = (0.5 * (block + block.T)).reshape(-1)
    return dx


def solve_direction(ws: KktWorkspace, rx: np.ndarray, ry: np.ndarray) -> KktSolution:
    """
    Solve H [dx; dy] + [A* dlam; 0] = -[rx; ry],  A dx = 0.

    With dx = Z q, R.T t = -[Z* rx; ry] is solved forward; dy comes from
    the reduced system r22.T r22 dy = -ry - r12.T t1, then q by
    back-substitution and dlam as the least-squares multiplier on A*.
    """
    p = ws.problem
    rx = np.asarray(rx, dtype=float)
    ry = np.asarray(ry, dtype=float)
    range_q, range_r, null_basis = p.constraint_qr
    t1 = _upper_solve(ws.r11, -(null_basis.T @ rx), transpose=True)
    dy = ws.reduced.solve(-ry - ws.r12.T @ t1)
    q = _upper_solve(ws.r11, t1 - ws.r12 @ dy)
    dx = _symmetrize_psd(p, null_basis @ q)
    stationarity = rx + ws.hxx.apply(dx) + ws.hxy @ dy
    dlam = -scipy.linalg.solve_triangular(range_r, range_q.T @ stationarity, lower=False)
    return KktSolution(dx, dy, dlam)

def kkt_residual(ws: KktWorkspace, rx: np.ndarray, ry: np.ndarray, sol: KktSolution) -> float:
    """Largest relative residual over the three block equations."""
    a = ws.problem.stacked_A
    r1 = ws.hxx.apply(sol.dx) + ws.hxy @ sol.dy + rx + a.T @ sol.dlam
    r2 = ws.hxy.T @ sol.dx + ws.hyy @ sol.dy + ry
    r3 = a @ sol.dx
    scale = 1.0 + max(float(np.max(np.abs(rx), initial=0.0)), float(np.max(np.abs(ry), initial=0.0)))
    return max(
        float(np.max(np.abs(r1), initial=0.0)),
        float(np.max(np.abs(r2), initial=0.0)),
        float(np.max(np.abs(r3), initial=0.0)),
    ) / scale


def predictor_rhs(
    p: Problem,
    u: Iterate,
    w: ControlVars,
    dw: ControlVars,
    ws: Optional[KktWorkspace] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Derivative of (grad_x F~, grad_y F~) along the target direction dw."""
    if ws is None:
        ws = build_workspace(p, u, w)
    d2 = ws.d**2
    rx = np.concatenate([h.xv * dv for h, dv in zip(ws.hessians, dw.v)]) - p.c_flat * dw.v0 / d2
    ry = -sum(a_i @ (h.sv * dv) for a_i, h, dv in zip(p.A, ws.hessians, dw.v)) + p.b * dw.v0 / d2
    return rx, ry


def dense_kkt_matrix(ws: KktWorkspace) -> np.ndarray:
    """Full KKT matrix in (x, y, lambda) coordinates, for small instances."""
    m = ws.problem.m
    a = ws.problem.stacked_A
    return np.block([
        [ws.hxx.dense(), ws.hxy, a.T],
        [ws.hxy.T, ws.hyy, np.zeros((m, m))],
        [a, np.zeros((m, m)), np.zeros((m, m))],
    ])


def dense_solve(ws: KktWorkspace, rx: np.ndarray, ry: np.ndarray) -> KktSolution:
    """Brute-force solve of the full KKT system."""
    p = ws.problem
    n, m = p.total_dim, p.m
    rhs = -np.concatenate((rx, ry, np.zeros(m)))
    sol = np.linalg.solve(dense_kkt_matrix(ws), rhs)
    return KktSolution(sol[:n], sol[n:n + m], sol[n + m:])
