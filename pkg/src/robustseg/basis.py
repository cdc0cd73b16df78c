"""Smooth 2-D basis functions for background modelling.

Two families are provided: the separable orthonormal DCT-II and discrete
orthonormal polynomials built by Gram-Schmidt. Both are ordered by the
JPEG zigzag over their 2-D frequency (or degree) index and returned as a
design matrix whose columns are orthonormal in row-major pixel order.

Row index ``x`` pairs with the first index ``u`` of each frequency pair,
column index ``y`` with the second index ``v``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalDegeneracyError, ParameterError

__all__ = [
    "BasisKind",
    "BasisSet",
    "zigzag_order",
    "make_dct_basis",
    "make_poly_basis",
    "make_basis",
]

ORTHO_TOL = 1e-8


class BasisKind(str, enum.Enum):
    DCT = "dct"
    ORTHO_POLY = "poly"


@dataclass(frozen=True, eq=False)
class BasisSet:
    """K orthonormal basis functions sampled on a ``rows x cols`` grid.

    ``design`` is the ``rows*cols x k`` matrix; column ``j`` is the basis
    function with frequency pair ``pairs[j]``. The array is read-only so a
    cached instance can be shared between threads.
    """

    shape: tuple[int, int]
    k: int
    design: np.ndarray
    kind: BasisKind
    pairs: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        """Side length for square blocks (row count otherwise)."""
        return self.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.shape[0] * self.shape[1]

    def column_image(self, j: int) -> np.ndarray:
        return self.design[:, j].reshape(self.shape)


def zigzag_order(count: int, shape: tuple[int, int] | None = None) -> list[tuple[int, int]]:
    """First ``count`` index pairs of the JPEG zigzag scan.

    Anti-diagonals ``d = u + v`` are visited in ascending order; odd
    diagonals run with ``u`` increasing, even ones with ``u`` decreasing,
    giving (0,0), (0,1), (1,0), (2,0), (1,1), (0,2), ...

    With ``shape`` given, pairs with ``u >= shape[0]`` or ``v >= shape[1]``
    are skipped, which is what rectangular edge blocks need.
    """
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    rows, cols = shape if shape is not None else (count, count)
    if count > rows * cols:
        raise ParameterError(f"count {count} exceeds {rows}x{cols} grid")
    out: list[tuple[int, int]] = []
    d = 0
    while len(out) < count:
        us = range(d + 1) if d % 2 == 1 else range(d, -1, -1)
        for u in us:
            v = d - u
            if u < rows and v < cols:
                out.append((u, v))
                if len(out) == count:
                    break
        d += 1
    return out


def _as_shape(n) -> tuple[int, int]:
    if isinstance(n, (tuple, list)):
        rows, cols = (int(n[0]), int(n[1]))
    else:
        rows = cols = int(n)
    if rows < 1 or cols < 1:
        raise ParameterError(f"block dimensions must be positive, got {rows}x{cols}")
    return rows, cols


def _check_k(k: int, shape: tuple[int, int]) -> None:
    if not 1 <= k <= shape[0] * shape[1]:
        raise ParameterError(f"k must be in [1, {shape[0] * shape[1]}], got {k}")


def dct_1d(n: int, count: int) -> np.ndarray:
    """``n x count`` matrix of orthonormal 1-D DCT-II vectors."""
    x = np.arange(n)[:, None]
    u = np.arange(count)[None, :]
    out = np.cos((2 * x + 1) * np.pi * u / (2 * n))
    out *= np.where(u == 0, np.sqrt(1.0 / n), np.sqrt(2.0 / n))
    return out


def poly_1d(n: int, count: int) -> np.ndarray:
    """``n x count`` matrix of discrete orthonormal polynomials on x = 1..n.

    Column ``m`` spans the same nested space as Gram-Schmidt applied to
    ``1, x, ..., x**m``, with the same sign convention (positive leading
    coefficient). The vector orthonormalized at step ``m`` is ``x * q[m-1]``
    rather than the raw monomial; the result is identical but the raw
    monomials lose all precision past degree ~10.
    """
    x = np.arange(1, n + 1, dtype=float)
    q = np.empty((n, count))
    q[:, 0] = 1.0 / np.sqrt(n)
    for m in range(1, count):
        v = x * q[:, m - 1]
        # modified Gram-Schmidt, then one reorthogonalization pass
        for _ in range(2):
            for j in range(m):
                v -= (q[:, j] @ v) * q[:, j]
        norm = np.linalg.norm(v)
        if norm < ORTHO_TOL:
            raise NumericalDegeneracyError(f"polynomial degree {m} vanishes on {n} points")
        q[:, m] = v / norm
    gram_err = np.abs(q.T @ q - np.eye(count)).max()
    if gram_err > ORTHO_TOL:
        raise NumericalDegeneracyError(
            f"orthogonality lost at {count} polynomials on {n} points ({gram_err:.2e})"
        )
    return q


def _assemble(shape, k, kind, one_d) -> BasisSet:
    pairs = zigzag_order(k, shape)
    max_u = max(p[0] for p in pairs) + 1
    max_v = max(p[1] for p in pairs) + 1
    rows_1d = one_d(shape[0], max_u)
    cols_1d = one_d(shape[1], max_v)
    design = np.empty((shape[0] * shape[1], k))
    for j, (u, v) in enumerate(pairs):
        design[:, j] = np.outer(rows_1d[:, u], cols_1d[:, v]).ravel()
    design.setflags(write=False)
    return BasisSet(shape=shape, k=k, design=design, kind=kind, pairs=tuple(pairs))


@lru_cache(maxsize=256)
def _cached(shape: tuple[int, int], k: int, kind: BasisKind) -> BasisSet:
    if kind is BasisKind.DCT:
        return _assemble(shape, k, kind, dct_1d)
    return _assemble(shape, k, kind, poly_1d)


def make_basis(n, k: int, kind: BasisKind | str = BasisKind.DCT) -> BasisSet:
    """Build (or fetch from cache) a basis on an ``n x n`` or ``(rows, cols)`` grid."""
    shape = _as_shape(n)
    _check_k(k, shape)
    return _cached(shape, int(k), BasisKind(kind))


def make_dct_basis(n, k: int) -> BasisSet:
    """First ``k`` zigzag-ordered 2-D DCT-II functions.

    ``P_uv(x, y) = b_u b_v cos((2x+1) pi u / 2N) cos((2y+1) pi v / 2N)`` with
    ``b_0 = sqrt(1/N)`` and ``b_u = sqrt(2/N)`` otherwise; x, y start at 0.
    """
    return make_basis(n, k, BasisKind.DCT)


def make_poly_basis(n, k: int) -> BasisSet:
    """First ``k`` zigzag-ordered separable orthonormal polynomials."""
    return make_basis(n, k, BasisKind.ORTHO_POLY)
