"""
Finite-Difference Oracle

Central-difference gradients and k-th directional derivatives of scalar
maps over flattened coordinates. Used to cross-check every analytic
derivative in the package.
"""

import math
from functools import lru_cache
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..core.exceptions import OutsideDomain, StencilOutsideDomain
from .cones import ConeSpec

ScalarMap = Callable[[np.ndarray], float]

_EPS = np.finfo(float).eps


def _evaluate(f: ScalarMap, point: np.ndarray) -> float:
    try:
        value = float(f(point))
    except OutsideDomain as e:
        raise StencilOutsideDomain(f"stencil point outside domain: {str(e)}")
    if not math.isfinite(value):
        raise StencilOutsideDomain("stencil evaluation is not finite")
    return value


def fd_grad(f: ScalarMap, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """
    Central-difference gradient.

    Args:
        f: Scalar map of a flat vector.
        x: Evaluation point.
        h: Step; eps^(1/3) * (1 + |x|_inf) when omitted.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if h is None:
        h = _EPS ** (1.0 / 3.0) * (1.0 + float(np.max(np.abs(x), initial=0.0)))
    out = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        out[k] = (_evaluate(f, x + e) - _evaluate(f, x - e)) / (2.0 * h)
    return out


@lru_cache(maxsize=None)
def central_weights(order: int) -> tuple:
    """
    Weights of the (2 order + 1)-point central stencil for the order-th
    derivative, from the moment conditions sum_j w_j j^m = m! [m == order].
    """
    offsets = np.arange(-order, order + 1, dtype=float)
    npts = offsets.size
    moments = np.vander(offsets, npts, increasing=True).T
    rhs = np.zeros(npts)
    rhs[order] = math.factorial(order)
    return tuple(np.linalg.solve(moments, rhs))


def fd_dirk(
    f: ScalarMap,
    x: np.ndarray,
    d: np.ndarray,
    order: int,
    h: Optional[float] = None,
) -> float:
    """
    k-th directional derivative D^k f(x)[d]^k by a central stencil.

    Args:
        f: Scalar map of a flat vector.
        x: Evaluation point.
        d: Direction.
        order: 2, 3 or 4.
        h: Step along d; eps^(1/(order+2)) * (1 + |x|_inf) / |d|_inf when omitted.
    """
    if order not in (2, 3, 4):
        raise ValueError(f"fd_dirk supports orders 2-4, got {order}")
    x = np.asarray(x, dtype=float).reshape(-1)
    d = np.asarray(d, dtype=float).reshape(-1)
    if h is None:
        dmax = max(float(np.max(np.abs(d), initial=0.0)), 1e-300)
        h = _EPS ** (1.0 / (order + 2)) * (1.0 + float(np.max(np.abs(x), initial=0.0))) / dmax
    weights = central_weights(order)
    total = 0.0
    for j, w in zip(range(-order, order + 1), weights):
        if w == 0.0:
            continue
        total += w * _evaluate(f, x + j * h * d)
    return total / h**order


def flatten_blocks(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate cone blocks in order; Psd blocks row-major."""
    if not blocks:
        return np.zeros(0)
    return np.concatenate([np.asarray(b, dtype=float).reshape(-1) for b in blocks])


def unflatten_blocks(cones: Sequence[ConeSpec], vec: np.ndarray) -> List[np.ndarray]:
    out = []
    offset = 0
    for c in cones:
        out.append(np.asarray(vec[offset:offset + c.dim], dtype=float).reshape(c.shape).copy())
        offset += c.dim
    return out
