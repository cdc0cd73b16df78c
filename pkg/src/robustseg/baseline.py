"""Hierarchical two-class k-means segmentation used as a comparison method.

Clusters each block's intensities into a foreground and a background
colour, coarse blocks first; every finer block starts from its parent's
colours and blends its own result with them. The darker cluster is the
foreground. This follows the general recipe of clustering-based document
segmenters, not any codec bit-exactly.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .imageio import to_luma

__all__ = ["kmeans2", "optimal_split", "within_sse", "hierarchical_segment"]


def within_sse(values, fg_mask) -> float:
    """Within-cluster sum of squared errors of a two-way partition."""
    values = np.asarray(values, dtype=float).ravel()
    fg_mask = np.asarray(fg_mask, dtype=bool).ravel()
    total = 0.0
    for part in (values[fg_mask], values[~fg_mask]):
        if part.size:
            total += float(((part - part.mean()) ** 2).sum())
    return total


def optimal_split(values) -> tuple[float, float]:
    """Globally optimal 1-D 2-means centroids ``(low, high)``.

    In one dimension the optimal partition is a threshold, so every cut of
    the sorted values is scored with prefix sums.
    """
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    cs = np.cumsum(x)
    cs2 = np.cumsum(x * x)
    i = np.arange(1, n)  # size of the low cluster
    # only cut between distinct values
    cuts = i[x[i - 1] < x[i]]
    if cuts.size == 0:
        return float(x[0]), float(x[0])
    lo_sum, lo_sq = cs[cuts - 1], cs2[cuts - 1]
    hi_sum, hi_sq = cs[-1] - lo_sum, cs2[-1] - lo_sq
    sse = (lo_sq - lo_sum**2 / cuts) + (hi_sq - hi_sum**2 / (n - cuts))
    c = cuts[np.argmin(sse)]
    return float(x[:c].mean()), float(x[c:].mean())


def kmeans2(block, init: tuple[float, float] | None = None, max_iters: int = 100):
    """Two-cluster Lloyd iterations on the block intensities.

    Returns ``(fg_color, bg_color, fg_mask)``. Without ``init`` the
    iterations start from the optimal threshold split and the darker centre
    is foreground; a block with fewer than two distinct values is then a
    single background cluster. With ``init = (fg, bg)`` the labels follow
    the given centres, and an emptied cluster keeps its previous centre.
    """
    px = np.asarray(block, dtype=float)
    values = px.ravel()
    if init is None:
        lo, hi = optimal_split(values)
        if lo == hi:
            return lo, lo, np.zeros(px.shape, dtype=bool)
        fg, bg = lo, hi
    else:
        fg, bg = float(init[0]), float(init[1])
    assign = None
    for _ in range(max_iters):
        new = np.abs(values - fg) < np.abs(values - bg)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        if assign.any():
            fg = float(values[assign].mean())
        if not assign.all():
            bg = float(values[~assign].mean())
    return fg, bg, assign.reshape(px.shape)


def hierarchical_segment(image, levels=(64, 32, 16, 8), blend: float = 0.5) -> np.ndarray:
    """Foreground mask from coarse-to-fine two-class clustering.

    At each level a block's colours are ``blend * own + (1 - blend) *
    parent``; the finest level's colours decide each pixel by nearest
    centre.
    """
    levels = [int(s) for s in levels]
    if not levels:
        raise ParameterError("levels must be non-empty")
    for a, b in zip(levels, levels[1:]):
        if b > a or a % b:
            raise ParameterError("each level must divide the previous one")
    if not 0 <= blend <= 1:
        raise ParameterError("blend must be in [0, 1]")
    img = np.asarray(image)
    if img.ndim == 3:
        img = to_luma(img)
    img = img.astype(float)
    H, W = img.shape

    parent = None
    parent_size = None
    for size in levels:
        nby, nbx = -(-H // size), -(-W // size)
        cent = np.empty((nby, nbx, 2))
        for i in range(nby):
            for j in range(nbx):
                r0, c0 = i * size, j * size
                px = img[r0:r0 + size, c0:c0 + size]
                if parent is None:
                    fg, bg, _ = kmeans2(px)
                else:
                    pf, pb = parent[r0 // parent_size, c0 // parent_size]
                    if pf == pb:
                        fg, bg, _ = kmeans2(px)
                    else:
                        fg, bg, _ = kmeans2(px, init=(pf, pb))
                        fg = blend * fg + (1 - blend) * pf
                        bg = blend * bg + (1 - blend) * pb
                cent[i, j] = fg, bg
        parent, parent_size = cent, size

    size = parent_size
    fg = np.repeat(np.repeat(parent[..., 0], size, axis=0), size, axis=1)[:H, :W]
    bg = np.repeat(np.repeat(parent[..., 1], size, axis=0), size, axis=1)[:H, :W]
    return np.abs(img - fg) < np.abs(img - bg)
