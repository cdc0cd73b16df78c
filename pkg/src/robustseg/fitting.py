"""Least-squares fitting of a basis model to block intensities."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet
from .errors import DegenerateSampleError, ParameterError

__all__ = [
    "Block",
    "FitResult",
    "as_block",
    "fit_least_squares",
    "fit_subset",
    "fit_minimal_batch",
    "evaluate_model",
    "SINGULAR_RTOL",
]

# smallest/largest singular value ratio below which a subset fit is rejected
SINGULAR_RTOL = 1e-8


@dataclass
class Block:
    """A window of grayscale intensities and its top-left position in the image."""

    pixels: np.ndarray
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim == 1:
            side = int(round(np.sqrt(px.size)))
            if side * side != px.size:
                raise ParameterError(f"flat block of {px.size} pixels is not square")
            px = px.reshape(side, side)
        if px.ndim != 2 or px.size == 0:
            raise ParameterError(f"block must be a non-empty 2-D array, got shape {px.shape}")
        if px.min() < 0 or px.max() > 255:
            raise ParameterError("block intensities must lie in [0, 255]")
        self.pixels = px
        self.origin = (int(self.origin[0]), int(self.origin[1]))

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def n(self) -> int:
        return self.pixels.shape[0]

    @property
    def flat(self) -> np.ndarray:
        return self.pixels.ravel()


def as_block(block) -> Block:
    """Wrap a raw array as a Block; Block instances pass through.

    Raw arrays skip the [0, 255] range check so that exact-model test
    signals with arbitrary weights can be fitted.
    """
    if isinstance(block, Block):
        return block
    px = np.asarray(block, dtype=float)
    if px.ndim == 1:
        side = int(round(np.sqrt(px.size)))
        px = px.reshape(side, side)
    b = Block.__new__(Block)
    b.pixels = px
    b.origin = (0, 0)
    return b


@dataclass
class FitResult:
    alpha: np.ndarray
    residuals: np.ndarray = field(repr=False)
    rmse: float

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max())


def _check_shapes(block: Block, basis: BasisSet) -> None:
    if block.shape != basis.shape:
        raise ParameterError(f"block shape {block.shape} does not match basis shape {basis.shape}")


def _result(alpha: np.ndarray, f: np.ndarray, basis: BasisSet) -> FitResult:
    residuals = np.abs(f - basis.design @ alpha)
    rmse = float(np.sqrt(np.mean(residuals**2)))
    return FitResult(alpha=alpha, residuals=residuals, rmse=rmse)


def fit_least_squares(block, basis: BasisSet) -> FitResult:
    """Fit all pixels; with orthonormal columns the solution is ``P.T @ F``."""
    block = as_block(block)
    _check_shapes(block, basis)
    f = block.flat
    return _result(basis.design.T @ f, f, basis)


def fit_subset(block, basis: BasisSet, pixel_indices) -> FitResult:
    """Least-squares fit restricted to ``pixel_indices`` (row-major flat indices).

    Residuals are reported for every pixel of the block. With exactly K
    indices this is exact interpolation. Raises DegenerateSampleError when
    the selected rows of the design matrix are numerically rank deficient.
    """
    block = as_block(block)
    _check_shapes(block, basis)
    idx = np.asarray(pixel_indices, dtype=np.intp).ravel()
    if idx.size < basis.k:
        raise ParameterError(f"need at least k={basis.k} pixels, got {idx.size}")
    if idx.min() < 0 or idx.max() >= basis.n_pixels:
        raise ParameterError("pixel index out of range")
    if np.unique(idx).size != idx.size:
        raise ParameterError("pixel indices must be distinct")
    f = block.flat
    sub = basis.design[idx]
    u, s, vt = np.linalg.svd(sub, full_matrices=False)
    if s[-1] < SINGULAR_RTOL * s[0]:
        raise DegenerateSampleError(f"subset design matrix is singular (cond {s[0] / max(s[-1], 1e-300):.1e})")
    alpha = vt.T @ ((u.T @ f[idx]) / s)
    return _result(alpha, f, basis)


def fit_minimal_batch(design: np.ndarray, f: np.ndarray, samples: np.ndarray):
    """Exact fits for a batch of K-pixel samples.

    ``samples`` is an ``(M, K)`` integer array. Returns ``(alphas, valid)``
    where ``alphas`` is ``(M, K)`` and ``valid[i]`` is False for samples
    whose ``K x K`` submatrix fails the singular-value test; their rows of
    ``alphas`` are zero.
    """
    samples = np.asarray(samples, dtype=np.intp)
    m, k = samples.shape
    mats = design[samples]
    s = np.linalg.svd(mats, compute_uv=False)
    valid = s[:, -1] >= SINGULAR_RTOL * s[:, 0]
    alphas = np.zeros((m, k))
    if valid.any():
        rhs = f[samples[valid]][..., None]
        alphas[valid] = np.linalg.solve(mats[valid], rhs)[..., 0]
    return alphas, valid


def evaluate_model(alpha, basis: BasisSet, clamp: bool = True) -> np.ndarray:
    """Reconstruct ``P @ alpha`` as a block image, optionally clamped to [0, 255]."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (basis.k,):
        raise ParameterError(f"alpha must have length {basis.k}, got shape {alpha.shape}")
    out = (basis.design @ alpha).reshape(basis.shape)
    if clamp:
        np.clip(out, 0.0, 255.0, out=out)
    return out
