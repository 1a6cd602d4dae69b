"""
Dense Symmetric Linear Algebra

Factorizations, eigendecompositions, spectral matrix functions and SPD
solves for the small dense blocks used throughout the solver.
"""

from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
import scipy.linalg

from . import get_settings
from .exceptions import NoConvergence, NotPositiveDefinite, ShapeMismatch

GRAM_NEG_TOL = 1e-8

SymFunc = Literal["sqrt", "inv_sqrt", "inv"]


def as_sym(entries) -> np.ndarray:
    """Return a float copy of a square array with exact symmetry enforced."""
    m = np.array(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


def pd_tol() -> float:
    """Relative pivot threshold from settings (MCOPT_PD_TOL)."""
    return get_settings().pd_tol


def cholesky(m: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric matrix.

    Args:
        m: Symmetric matrix.
        tol: Relative pivot threshold against the largest diagonal entry;
            pd_tol() when omitted.

    Returns:
        Lower-triangular L with L @ L.T == m.

    Raises:
        NotPositiveDefinite: If a pivot is not above tol * max diagonal.
    """
    if tol is None:
        tol = pd_tol()
    m = as_sym(m)
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    scale = float(np.max(np.abs(np.diag(m)))) if m.size else 0.0
    if scale <= 0.0:
        raise NotPositiveDefinite("matrix has no positive diagonal")
    try:
        factor = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {str(e)}")
    pivots = np.diag(factor) ** 2
    if float(pivots.min()) <= tol * scale:
        raise NotPositiveDefinite(
            "pivot below threshold",
            {"min_pivot": float(pivots.min()), "max_diagonal": scale},
        )
    return factor


def is_positive_definite(m: np.ndarray, margin: float = 0.0) -> bool:
    """Cholesky-based test of ``m - margin * I`` being positive definite."""
    m = as_sym(m)
    try:
        cholesky(m - margin * np.eye(m.shape[0]))
    except NotPositiveDefinite:
        return False
    return True


def sym_eig(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Symmetric eigendecomposition.

    Returns:
        Eigenvalues in ascending order and the matching orthonormal
        eigenvectors as columns.
    """
    m = as_sym(m)
    if not np.all(np.isfinite(m)):
        raise NoConvergence("eigendecomposition of a non-finite matrix")
    try:
        return np.linalg.eigh(m)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"eigendecomposition failed: {str(e)}")


def sym_funcs(m: np.ndarray, which: SymFunc) -> np.ndarray:
    """
    Spectral functions of a positive definite matrix.

    Args:
        m: Positive definite matrix.
        which: ``sqrt``, ``inv_sqrt`` or ``inv``.
    """
    if which == "inv":
        factor = cholesky(m)
        return as_sym(scipy.linalg.cho_solve((factor, True), np.eye(factor.shape[0])))

    lam, vecs = sym_eig(m)
    if lam[0] <= pd_tol() * max(abs(lam[-1]), 1e-300):
        raise NotPositiveDefinite("spectral function of a non-positive-definite matrix")
    if which == "sqrt":
        f = np.sqrt(lam)
    elif which == "inv_sqrt":
        f = 1.0 / np.sqrt(lam)
    else:
        raise ValueError(f"unknown matrix function {which!r}")
    return as_sym((vecs * f) @ vecs.T)


@dataclass
class SpdFactor:
    """Cached Cholesky factor of an SPD matrix."""

    lower: np.ndarray

    @classmethod
    def of(cls, m: np.ndarray) -> "SpdFactor":
        return cls(cholesky(m))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve((self.lower, True), rhs)

    @property
    def order(self) -> int:
        return self.lower.shape[0]


def gram_root(m: np.ndarray) -> np.ndarray:
    """
    Square root R with R.T @ R == m for a positive semidefinite m.

    The eigendecomposition runs on the unit-diagonal scaling of m, so
    badly scaled blocks keep their small eigenvalues. Negative eigenvalues
    at rounding level are clipped to zero.

    Raises:
        NotPositiveDefinite: If m has a negative diagonal or is indefinite
            beyond GRAM_NEG_TOL after scaling.
    """
    m = as_sym(m)
    diag = np.diag(m)
    if not np.all(np.isfinite(m)) or np.any(diag < 0.0):
        raise NotPositiveDefinite("Gram root of a matrix with negative or non-finite diagonal")
    scale = np.sqrt(np.where(diag > 0.0, diag, 1.0))
    lam, vecs = sym_eig(m / np.outer(scale, scale))
    if lam[0] < -GRAM_NEG_TOL * max(lam[-1], 1.0):
        raise NotPositiveDefinite("matrix is indefinite", {"min_eig": float(lam[0])})
    return np.sqrt(np.clip(lam, 0.0, None))[:, None] * vecs.T * scale[None, :]


def solve_spd(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``m @ x = rhs`` for positive definite ``m``."""
    return SpdFactor.of(m).solve(np.asarray(rhs, dtype=float))


def min_eig_ratio(m: np.ndarray) -> float:
    """Smallest over largest eigenvalue magnitude; rank diagnostics for A A^T."""
    lam, _ = sym_eig(m)
    top = max(abs(lam[-1]), abs(lam[0]))
    if top == 0.0:
        return 0.0
    return float(lam[0] / top)
