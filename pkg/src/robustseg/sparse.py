"""Background/foreground separation by L1 sparse decomposition.

Solves ``min ||S||_1  s.t.  ||F - P a - S||_2 <= eps`` for a block ``F``
and orthonormal basis ``P``. For fixed ``S`` the best weights are
``a = P.T (F - S)``, which leaves the constraint
``||Q (F - S)||_2 <= eps`` with ``Q = I - P P.T``. Projection onto that set
is closed form, so the problem is split as

    S-step:  soft-threshold           (prox of the L1 norm)
    V-step:  project onto the ball    (keep the range(P) part, shrink the rest)

and solved by scaled ADMM with residual balancing. The V iterate is
always feasible; the best feasible iterate seen is returned.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet
from .errors import ParameterError
from .fitting import as_block

__all__ = ["SparseResult", "sparse_decompose", "mask_from_sparse", "default_epsilon", "sparse_segment_image"]


@dataclass
class SparseResult:
    alpha: np.ndarray
    s: np.ndarray = field(repr=False)
    objective: float
    feasible: bool
    iterations: int
    trace: list = field(default_factory=list, repr=False)


def default_epsilon(n_pixels: int, epsilon2: float = 3.0) -> float:
    """Constraint radius ``sqrt(n_pixels) * epsilon2``."""
    return float(np.sqrt(n_pixels) * epsilon2)


def _soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def sparse_decompose(block, basis: BasisSet, epsilon: float | None = None,
                     solver_tol: float = 1e-9, max_iters: int = 20000,
                     rho: float | None = None, record_trace: bool = False) -> SparseResult:
    """Split ``block`` into a smooth part ``P @ alpha`` and a sparse part ``s``.

    ``epsilon`` defaults to ``sqrt(N*N) * 3``. ``feasible`` reports whether
    the returned point satisfies the constraint to within rounding. With
    ``record_trace`` the best objective after every iteration is kept in
    ``trace`` (non-increasing by construction).
    """
    block = as_block(block)
    if block.shape != basis.shape:
        raise ParameterError(f"block shape {block.shape} does not match basis shape {basis.shape}")
    n = basis.n_pixels
    eps = default_epsilon(n) if epsilon is None else float(epsilon)
    if eps < 0:
        raise ParameterError("epsilon must be >= 0")
    P = basis.design
    f = block.flat

    def project(z):
        d = z - f
        par = P @ (P.T @ d)
        perp = d - par
        norm = np.linalg.norm(perp)
        if norm > eps:
            perp *= eps / norm
        return f + par + perp

    def finish(v, objective, iters, trace):
        alpha = P.T @ (f - v)
        gap = np.linalg.norm(f - P @ alpha - v)
        return SparseResult(alpha=alpha, s=v.reshape(basis.shape), objective=objective,
                            feasible=bool(gap <= eps * (1 + 1e-9) + 1e-9), iterations=iters, trace=trace)

    zero = np.zeros(n)
    resid0 = f - P @ (P.T @ f)
    if np.linalg.norm(resid0) <= eps:
        return finish(zero, 0.0, 0, [0.0] if record_trace else [])

    if rho is None:
        rho = 1.0 / max(np.abs(resid0).max(), 1e-12)
    v = project(zero)
    u = np.zeros(n)
    best_v, best_obj = v.copy(), float(np.abs(v).sum())
    trace = [best_obj] if record_trace else []
    sqrt_n = np.sqrt(n)
    it = 0
    for it in range(1, max_iters + 1):
        s = _soft(v - u, 1.0 / rho)
        v_prev = v
        v = project(s + u)
        u += s - v
        obj = float(np.abs(v).sum())
        if obj < best_obj:
            best_obj, best_v = obj, v.copy()
        if record_trace:
            trace.append(best_obj)
        r = np.linalg.norm(s - v)
        d = rho * np.linalg.norm(v - v_prev)
        scale = max(np.linalg.norm(s), np.linalg.norm(v), 1.0)
        if r <= solver_tol * scale and d <= solver_tol * max(rho * np.linalg.norm(u), 1.0) * sqrt_n:
            break
        if r > 10 * d:
            rho *= 2.0
            u /= 2.0
        elif d > 10 * r:
            rho /= 2.0
            u *= 2.0
    return finish(best_v, best_obj, it, trace)


def mask_from_sparse(result: SparseResult, threshold: float) -> np.ndarray:
    """Foreground where the sparse component exceeds ``threshold`` in magnitude."""
    if not threshold > 0:
        raise ParameterError("threshold must be > 0")
    return np.abs(result.s) > threshold


def sparse_segment_image(image, block_size: int = 64, k: int = 10, epsilon2: float = 3.0,
                         epsilon_intercept: float = 1.0, epsilon_slope: float = 0.22,
                         max_iters: int = 5000) -> tuple[np.ndarray, int]:
    """Tile the image and flag large sparse-component pixels in every tile.

    The mask threshold of each tile is the RANSAC threshold
    ``epsilon_intercept + epsilon_slope * range``. Returns ``(mask, tiles)``.
    """
    from .basis import make_basis

    img = np.asarray(image, dtype=float)
    H, W = img.shape
    mask = np.zeros((H, W), dtype=bool)
    tiles = 0
    for r in range(0, H, block_size):
        for c in range(0, W, block_size):
            px = img[r:r + block_size, c:c + block_size]
            basis = make_basis(px.shape, min(k, px.size))
            res = sparse_decompose(px, basis, epsilon=default_epsilon(px.size, epsilon2),
                                   solver_tol=1e-6, max_iters=max_iters)
            threshold = epsilon_intercept + epsilon_slope * float(np.ptp(px))
            mask[r:r + block_size, c:c + block_size] = mask_from_sparse(res, threshold)
            tiles += 1
    return mask, tiles
