"""
Tests for the dense symmetric linear algebra helpers.
"""

import numpy as np
import pytest

from src.core import get_settings
from src.core.exceptions import NotPositiveDefinite, ShapeMismatch
from src.core.linalg import (
    SpdFactor,
    as_sym,
    cholesky,
    gram_root,
    is_positive_definite,
    min_eig_ratio,
    pd_tol,
    solve_spd,
    sym_eig,
    sym_funcs,
)


def test_cholesky_identity():
    """Identity factors to itself"""
    np.testing.assert_allclose(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_known_factor():
    """[[4,2],[2,5]] has factor [[2,0],[1,2]]"""
    factor = cholesky(np.array([[4.0, 2.0], [2.0, 5.0]]))
    np.testing.assert_allclose(factor, [[2.0, 0.0], [1.0, 2.0]], atol=1e-14)


def test_cholesky_rejects_indefinite():
    """Eigenvalues 3 and -1 fail the test"""
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_cholesky_rejects_tiny_pivot():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.diag([1.0, 1e-15]))


def test_as_sym_requires_square():
    with pytest.raises(ShapeMismatch):
        as_sym(np.zeros((2, 3)))


def test_sym_eig_diagonal():
    lam, vecs = sym_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(lam, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(np.abs(vecs), np.eye(3)[:, [1, 2, 0]])


def test_sym_eig_swap_matrix():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    lam, vecs = sym_eig(m)
    np.testing.assert_allclose(lam, [-1.0, 1.0], atol=1e-15)
    assert np.linalg.norm(m @ vecs - vecs * lam) <= 1e-12
    assert np.linalg.norm(vecs.T @ vecs - np.eye(2)) <= 1e-12


def test_sym_funcs_values():
    np.testing.assert_allclose(sym_funcs(np.diag([4.0, 9.0]), "sqrt"), np.diag([2.0, 3.0]))
    np.testing.assert_allclose(
        sym_funcs(np.array([[2.0, 1.0], [1.0, 2.0]]), "inv"),
        np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0,
        atol=1e-14,
    )
    np.testing.assert_allclose(sym_funcs(np.eye(4), "inv_sqrt"), np.eye(4))


def test_sym_funcs_rejects_unknown_and_indefinite():
    with pytest.raises(ValueError):
        sym_funcs(np.eye(2), "log")
    with pytest.raises(NotPositiveDefinite):
        sym_funcs(np.diag([1.0, -1.0]), "sqrt")


def test_sqrt_round_trip(rng):
    """sqrt(M)^2 recovers M for random SPD matrices"""
    for order in (1, 5, 20):
        g = rng.standard_normal((order, order))
        m = g @ g.T + order * np.eye(order)
        root = sym_funcs(m, "sqrt")
        assert np.linalg.norm(root @ root - m) <= 1e-9 * np.linalg.norm(m)
        inv_root = sym_funcs(m, "inv_sqrt")
        assert np.linalg.norm(inv_root @ m @ inv_root - np.eye(order)) <= 1e-9


def test_solve_spd_values(rng):
    b = np.array([1.0, -2.0])
    np.testing.assert_allclose(solve_spd(np.eye(2), b), b)
    np.testing.assert_allclose(solve_spd(np.diag([2.0, 4.0]), [2.0, 8.0]), [1.0, 2.0])

    g = rng.standard_normal((8, 8))
    m = g @ g.T + np.eye(8)
    x0 = rng.standard_normal(8)
    np.testing.assert_allclose(solve_spd(m, m @ x0), x0, atol=1e-9)


def test_spd_factor_solves_matrix_rhs(rng):
    g = rng.standard_normal((4, 4))
    m = g @ g.T + np.eye(4)
    factor = SpdFactor.of(m)
    assert factor.order == 4
    rhs = rng.standard_normal((4, 3))
    np.testing.assert_allclose(m @ factor.solve(rhs), rhs, atol=1e-10)


def test_cholesky_agrees_with_eigenvalues(rng):
    """Cholesky succeeds exactly when the smallest eigenvalue is positive"""
    for _ in range(50):
        g = rng.standard_normal((4, 4))
        m = as_sym(g + g.T)
        lam = sym_eig(m)[0]
        if abs(lam[0]) <= 1e-10 * abs(lam).max():
            continue
        assert is_positive_definite(m) == (lam[0] > 0.0)


def test_min_eig_ratio():
    assert min_eig_ratio(np.diag([1.0, 4.0])) == pytest.approx(0.25)
    assert min_eig_ratio(np.zeros((2, 2))) == 0.0


def test_gram_root_of_badly_scaled_matrix(rng):
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    core = q @ np.diag([1.0, 2.0, 3.0, 4.0]) @ q.T
    d = np.array([1e6, 1.0, 1e-3, 1e2])
    root = gram_root(core * np.outer(d, d))
    np.testing.assert_allclose(root.T @ root / np.outer(d, d), core, atol=1e-12)


def test_gram_root_of_singular_and_indefinite():
    root = gram_root(np.ones((2, 2)))
    np.testing.assert_allclose(root.T @ root, np.ones((2, 2)), atol=1e-14)
    with pytest.raises(NotPositiveDefinite):
        gram_root(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        gram_root(np.diag([1.0, -1.0]))


def test_pivot_threshold_follows_settings(monkeypatch):
    monkeypatch.setenv("MCOPT_PD_TOL", "1e-3")
    get_settings.cache_clear()
    try:
        assert pd_tol() == 1e-3
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.diag([1.0, 1e-4]))
        cholesky(np.diag([1.0, 1e-4]), tol=1e-13)
    finally:
        monkeypatch.delenv("MCOPT_PD_TOL")
        get_settings.cache_clear()
    assert pd_tol() == 1e-13
