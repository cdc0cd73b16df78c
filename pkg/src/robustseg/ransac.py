"""RANSAC fit of a smooth basis model to one block.

Pixels within the adaptive threshold of the winning model are inliers
(background); the rest are outliers (foreground).

Sampling is reproducible: iteration ``i`` uses the ``i``-th call of
``numpy.random.default_rng(seed).choice(n_pixels, k, replace=False)``.
This mapping is part of the public contract and must not change.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _backend
from .basis import BasisSet
from .errors import DegenerateSampleError, NoModelError, ParameterError, UnreachableConfidenceError
from .fitting import as_block, fit_minimal_batch, fit_subset

__all__ = [
    "RansacParams",
    "RansacResult",
    "adaptive_epsilon",
    "required_iterations",
    "draw_samples",
    "ransac_segment",
]

_CHUNK = 128


@dataclass(frozen=True)
class RansacParams:
    """RANSAC settings.

    ``k`` defaults to the basis size. ``early_exit`` is an inlier fraction
    at which iteration stops; None runs the full budget. ``exhaustive``
    replaces random sampling with every K-subset of pixels, which is only
    feasible for tiny blocks.
    """

    k: int | None = None
    max_iters: int = 1000
    epsilon_intercept: float = 1.0
    epsilon_slope: float = 0.22
    seed: int = 0
    refit: bool = True
    early_exit: float | None = None
    exhaustive: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.epsilon_intercept < 0 or self.epsilon_slope < 0:
            raise ParameterError("epsilon coefficients must be non-negative")
        if self.early_exit is not None and not 0 < self.early_exit <= 1:
            raise ParameterError("early_exit must be in (0, 1]")


@dataclass
class RansacResult:
    alpha: np.ndarray
    inlier_mask: np.ndarray = field(repr=False)
    consensus_size: int
    iterations_run: int
    epsilon_used: float

    @property
    def inlier_fraction(self) -> float:
        return self.consensus_size / self.inlier_mask.size


def adaptive_epsilon(block, params: RansacParams | None = None) -> float:
    """Inlier threshold ``intercept + slope * (max - min)`` of the block."""
    params = params or RansacParams()
    px = as_block(block).pixels
    return params.epsilon_intercept + params.epsilon_slope * float(px.max() - px.min())


def required_iterations(inlier_ratio: float, model_size: int, failure_prob: float) -> int:
    """Smallest M with ``(1 - w**K)**M <= failure_prob``."""
    if not 0 < inlier_ratio < 1:
        raise ParameterError("inlier_ratio must be in (0, 1)")
    if not 0 < failure_prob < 1:
        raise ParameterError("failure_prob must be in (0, 1)")
    if model_size < 1:
        raise ParameterError("model_size must be >= 1")
    good = inlier_ratio**model_size
    if good == 0.0:
        raise UnreachableConfidenceError(
            f"inlier_ratio**model_size underflows for w={inlier_ratio}, K={model_size}"
        )
    return max(1, math.ceil(math.log(failure_prob) / math.log1p(-good)))


def draw_samples(n_pixels: int, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent draws of ``k`` distinct pixel indices."""
    out = np.empty((count, k), dtype=np.intp)
    for i in range(count):
        out[i] = rng.choice(n_pixels, size=k, replace=False)
    return out


def _sample_chunks(n_pixels, k, params):
    if params.exhaustive:
        combos = combinations(range(n_pixels), k)
        while True:
            chunk = np.array(list(_take(combos, 4096)), dtype=np.intp)
            if chunk.size == 0:
                return
            yield chunk
    else:
        rng = np.random.default_rng(params.seed)
        done = 0
        while done < params.max_iters:
            c = min(_CHUNK, params.max_iters - done)
            yield draw_samples(n_pixels, k, c, rng)
            done += c


def _take(it, n):
    for _, item in zip(range(n), it):
        yield item


def ransac_segment(block, basis: BasisSet, params: RansacParams | None = None,
                   epsilon: float | None = None) -> RansacResult:
    """Robustly fit ``basis`` to ``block`` and split pixels into inliers/outliers.

    Each iteration exactly fits K random distinct pixels and counts pixels
    with absolute residual <= epsilon; the first largest consensus set wins.
    With ``params.refit`` the winner is re-estimated by least squares over
    its inliers and the mask recomputed once against the refit model.

    ``epsilon`` overrides the adaptive threshold.
    """
    params = params or RansacParams()
    block = as_block(block)
    if block.shape != basis.shape:
        raise ParameterError(f"block shape {block.shape} does not match basis shape {basis.shape}")
    k = basis.k
    if params.k is not None and params.k != k:
        raise ParameterError(f"params.k={params.k} but basis has k={k}")
    n = basis.n_pixels
    if n < k:
        raise ParameterError(f"block has {n} pixels, fewer than k={k}")

    kern = _backend.kernels
    design = np.ascontiguousarray(basis.design)
    f = np.ascontiguousarray(block.flat)
    eps = adaptive_epsilon(block, params) if epsilon is None else float(epsilon)

    best_alpha = None
    best_count = -1
    iterations = 0
    for samples in _sample_chunks(n, k, params):
        alphas, valid = fit_minimal_batch(design, f, samples)
        i, count = kern.best_consensus(design, f, alphas, valid.view(np.uint8), eps)
        if i >= 0 and count > best_count:
            best_alpha, best_count = alphas[i].copy(), count
        iterations += len(samples)
        if params.early_exit is not None and best_count >= params.early_exit * n:
            break
    if best_alpha is None:
        raise NoModelError(f"all {iterations} samples were degenerate")

    alpha = best_alpha
    mask = kern.inlier_mask(design, f, alpha, eps)
    if params.refit and mask.sum() >= k:
        try:
            alpha = fit_subset(block, basis, np.flatnonzero(mask)).alpha
            mask = kern.inlier_mask(design, f, alpha, eps)
        except DegenerateSampleError:
            pass
    return RansacResult(
        alpha=alpha,
        inlier_mask=mask,
        consensus_size=int(mask.sum()),
        iterations_run=iterations,
        epsilon_used=eps,
    )
