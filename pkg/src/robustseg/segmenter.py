"""Whole-image background/foreground segmentation by mode dispatch.

Each top-level block is tried against progressively more expensive modes:

1. flat: a single intensity, labelled by comparison with neighbour
   background colours;
2. smooth: a full least-squares fit predicts every pixel within
   ``epsilon2``;
3. text over constant background: few distinct colours and a wide range;
   the most frequent neighbour-consistent colour is background;
4. RANSAC: inliers are background, accepted when the inlier fraction
   exceeds ``epsilon3`` or the block is already at ``min_block``;
5. otherwise the block is split into quadrants which are segmented
   recursively.

Neighbours are the causal ones in raster order (left, top-left, top,
top-right). Quadrants of a block only see records from other top-level
blocks, so siblings never depend on each other.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np
from scipy import ndimage

from .basis import BasisKind, make_basis
from .errors import NoModelError, ParameterError
from .fitting import Block, fit_least_squares
from .imageio import to_luma
from .ransac import RansacParams, adaptive_epsilon, ransac_segment

__all__ = [
    "Mode",
    "FlatDecision",
    "SegConfig",
    "BlockRecord",
    "TextSegmentation",
    "flat_check",
    "text_over_constant_check",
    "neighbor_backgrounds",
    "segment_block",
    "segment_image",
    "postprocess_largest_components",
    "mode_counts",
]


class Mode(str, enum.Enum):
    FLAT = "Flat"
    SMOOTH = "Smooth"
    TEXT_OVER_CONSTANT = "TextOverConstant"
    RANSAC = "Ransac"
    SPLIT = "Split"


class FlatDecision(enum.Enum):
    ALL_BACKGROUND = "AllBackground"
    ALL_FOREGROUND = "AllForeground"
    NOT_FLAT = "NotFlat"


@dataclass(frozen=True)
class SegConfig:
    block_size: int = 64
    min_block: int = 8
    k: int = 10
    epsilon2: float = 3.0
    epsilon3: float = 0.5
    flat_tolerance: float = 10.0
    color_count_max: int = 10
    range_min: float = 50.0
    ransac: RansacParams = field(default_factory=RansacParams)
    basis_kind: BasisKind = BasisKind.DCT
    # flat block with no processed neighbour (e.g. the first block)
    flat_default_background: bool = True
    per_channel: bool = False

    def __post_init__(self):
        if self.min_block < 1 or self.block_size < self.min_block:
            raise ParameterError("need 1 <= min_block <= block_size")
        ratio = self.block_size // self.min_block
        if self.block_size % self.min_block or ratio & (ratio - 1):
            raise ParameterError("block_size must be min_block times a power of two")
        if not 0 <= self.epsilon3 <= 1:
            raise ParameterError("epsilon3 must be in [0, 1]")
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        object.__setattr__(self, "basis_kind", BasisKind(self.basis_kind))

    @property
    def max_depth(self) -> int:
        return int(math.log2(self.block_size // self.min_block))


@dataclass
class BlockRecord:
    origin: tuple[int, int]
    size: tuple[int, int]
    mode_taken: Mode
    background_color: int | None
    depth: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.mode_taken is not Mode.SPLIT


@dataclass
class TextSegmentation:
    mask: np.ndarray
    background_color: int


def _round(x: float) -> int:
    return int(math.floor(x + 0.5))


def _consistent(color: float, neighbors: Iterable[float], tolerance: float) -> bool:
    return any(abs(color - nb) < tolerance for nb in neighbors)


def flat_check(block, neighbors: Iterable[float], tolerance: float = 10.0,
               default_background: bool = True) -> FlatDecision:
    """Label a single-valued block from its neighbours' background colours.

    Background iff some neighbour colour differs by less than ``tolerance``;
    with no neighbours at all ``default_background`` decides.
    """
    px = np.asarray(block.pixels if isinstance(block, Block) else block)
    first = px.flat[0]
    if not np.all(px == first):
        return FlatDecision.NOT_FLAT
    neighbors = list(neighbors)
    if not neighbors:
        return FlatDecision.ALL_BACKGROUND if default_background else FlatDecision.ALL_FOREGROUND
    if _consistent(float(first), neighbors, tolerance):
        return FlatDecision.ALL_BACKGROUND
    return FlatDecision.ALL_FOREGROUND


def text_over_constant_check(block, neighbors: Iterable[float],
                             config: SegConfig | None = None) -> TextSegmentation | None:
    """Segment text or graphics drawn over a constant background.

    Applies when the block has at most ``color_count_max`` distinct values
    and a range above ``range_min``. Colours are tried by descending pixel
    share (ties to the darker colour); the first within ``flat_tolerance``
    of a neighbour background wins, else the most frequent one. Returns
    None when the block does not qualify.
    """
    config = config or SegConfig()
    px = np.asarray(block.pixels if isinstance(block, Block) else block)
    values, counts = np.unique(px, return_counts=True)
    if len(values) > config.color_count_max or values[-1] - values[0] <= config.range_min:
        return None
    order = np.lexsort((values, -counts))
    neighbors = list(neighbors)
    chosen = values[order[0]]
    for i in order:
        if _consistent(float(values[i]), neighbors, config.flat_tolerance):
            chosen = values[i]
            break
    return TextSegmentation(mask=px != chosen, background_color=_round(float(chosen)))


def _touches_causal_border(rec: BlockRecord, origin, size) -> bool:
    r, c = origin
    h, w = size
    rr, rc = rec.origin
    rh, rw = rec.size
    # left column, rows r..r+h-1
    if rc <= c - 1 < rc + rw and rr < r + h and r < rr + rh:
        return True
    # top row including both corners, cols c-1..c+w
    return rr <= r - 1 < rr + rh and rc < c + w + 1 and c - 1 < rc + rw


def neighbor_backgrounds(origin, size, records: Iterable[BlockRecord]) -> set[int]:
    """Background colours of processed leaf blocks touching the causal border.

    The causal border is the column left of the block and the row above
    it, corners included (left, top-left, top and top-right neighbours).
    """
    out = set()
    for rec in records:
        if rec.is_leaf and rec.background_color is not None and _touches_causal_border(rec, origin, size):
            out.add(rec.background_color)
    return out


NeighborLookup = Callable[[tuple[int, int], tuple[int, int]], set]


def _lookup_from(neighbors) -> NeighborLookup:
    if callable(neighbors):
        return neighbors
    items = list(neighbors or ())
    if items and isinstance(items[0], BlockRecord):
        return lambda origin, size: neighbor_backgrounds(origin, size, items)
    colors = set(items)
    return lambda origin, size: colors


def _block_seed(seed: int, origin, size) -> int:
    ss = np.random.SeedSequence([seed, origin[0], origin[1], size[0], size[1]])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _segment(px: np.ndarray, origin, nominal: int, depth: int, lookup: NeighborLookup,
             config: SegConfig, records: list) -> np.ndarray:
    """Recursive worker; returns the foreground mask and appends records."""
    h, w = px.shape
    size = (h, w)
    neighbors = lookup(origin, size)

    decision = flat_check(px, neighbors, config.flat_tolerance, config.flat_default_background)
    if decision is FlatDecision.ALL_BACKGROUND:
        records.append(BlockRecord(origin, size, Mode.FLAT, _round(float(px.flat[0])), depth))
        return np.zeros(size, dtype=bool)
    if decision is FlatDecision.ALL_FOREGROUND:
        records.append(BlockRecord(origin, size, Mode.FLAT, None, depth))
        return np.ones(size, dtype=bool)

    basis = make_basis(size, min(config.k, h * w), config.basis_kind)
    fit = fit_least_squares(px, basis)
    if fit.max_residual < config.epsilon2:
        records.append(BlockRecord(origin, size, Mode.SMOOTH, _round(float(px.mean())), depth))
        return np.zeros(size, dtype=bool)

    text = text_over_constant_check(px, neighbors, config)
    if text is not None:
        records.append(BlockRecord(origin, size, Mode.TEXT_OVER_CONSTANT, text.background_color, depth))
        return text.mask

    at_min = nominal <= config.min_block
    params = replace(config.ransac, k=None, seed=_block_seed(config.ransac.seed, origin, size))
    block = Block(px, origin)
    try:
        result = ransac_segment(block, basis, params)
        inliers = result.inlier_mask.reshape(size)
        accept = result.inlier_fraction > config.epsilon3 or at_min
    except NoModelError:
        if not at_min:
            result, accept = None, False
        else:
            # every sample degenerate: fall back to the plain least-squares model
            inliers = fit.residuals.reshape(size) <= adaptive_epsilon(block, config.ransac)
            accept = True
    if accept:
        color = _round(float(px[inliers].mean())) if inliers.any() else None
        records.append(BlockRecord(origin, size, Mode.RANSAC, color, depth))
        return ~inliers

    half = nominal // 2
    mask = np.zeros(size, dtype=bool)
    for dr in (0, half):
        for dc in (0, half):
            if dr >= h or dc >= w:
                continue
            sub = px[dr:dr + half, dc:dc + half]
            mask[dr:dr + half, dc:dc + half] = _segment(
                sub, (origin[0] + dr, origin[1] + dc), half, depth + 1, lookup, config, records)
    bg = px[~mask]
    records.append(BlockRecord(origin, size, Mode.SPLIT, _round(float(bg.mean())) if bg.size else None, depth))
    return mask


def segment_block(block, neighbors=None, config: SegConfig | None = None, depth: int = 0,
                  records: list | None = None, nominal: int | None = None):
    """Segment one block, splitting recursively when RANSAC is not accepted.

    ``neighbors`` is a set of background colours, a sequence of
    BlockRecords, or a callable ``(origin, size) -> set`` used for every
    sub-block. Returns ``(foreground_mask, record)`` for the block itself;
    pass a list as ``records`` to collect the records of all sub-blocks.
    """
    config = config or SegConfig()
    block = block if isinstance(block, Block) else Block(block)
    if min(block.shape) < 1:
        raise ParameterError("empty block")
    collected = [] if records is None else records
    start = len(collected)
    nominal = nominal or max(block.shape)
    mask = _segment(block.pixels, block.origin, nominal, depth, _lookup_from(neighbors), config, collected)
    # the block's own record is appended last
    return mask, collected[-1] if len(collected) > start else None


class _ColorMap:
    """Per-pixel background colour of committed leaf records (-1 = none)."""

    def __init__(self, shape):
        self.grid = np.full(shape, -1, dtype=np.int16)

    def lookup(self, origin, size) -> set[int]:
        r, c = origin
        h, w = size
        H, W = self.grid.shape
        vals = []
        if c >= 1:
            vals.append(self.grid[r:min(r + h, H), c - 1])
        if r >= 1:
            vals.append(self.grid[r - 1, max(c - 1, 0):min(c + w + 1, W)])
        if not vals:
            return set()
        v = np.unique(np.concatenate(vals))
        return {int(x) for x in v if x >= 0}

    def commit(self, records):
        for rec in records:
            if rec.is_leaf and rec.background_color is not None:
                r, c = rec.origin
                h, w = rec.size
                self.grid[r:r + h, c:c + w] = rec.background_color


def _segment_gray(img: np.ndarray, config: SegConfig, threads: int):
    H, W = img.shape
    B = config.block_size
    nby, nbx = -(-H // B), -(-W // B)
    cmap = _ColorMap((H, W))
    mask = np.zeros((H, W), dtype=bool)
    done: dict[tuple[int, int], list] = {}

    def run(ij):
        i, j = ij
        r0, c0 = i * B, j * B
        recs: list = []

        def lookup(origin, size):
            # committed blocks plus earlier siblings inside this top-level block
            return cmap.lookup(origin, size) | neighbor_backgrounds(origin, size, recs)

        m = _segment(img[r0:r0 + B, c0:c0 + B], (r0, c0), B, 0, lookup, config, recs)
        return ij, m, recs

    # wavefront: block (i, j) only reads blocks with a smaller j + 2i
    waves: dict[int, list] = {}
    for i in range(nby):
        for j in range(nbx):
            waves.setdefault(j + 2 * i, []).append((i, j))
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for t in sorted(waves):
            jobs = waves[t]
            results = list(pool.map(run, jobs)) if pool and len(jobs) > 1 else [run(ij) for ij in jobs]
            for (i, j), m, recs in results:
                mask[i * B:i * B + m.shape[0], j * B:j * B + m.shape[1]] = m
                cmap.commit(recs)
                done[(i, j)] = recs
    finally:
        if pool:
            pool.shutdown()
    records = [rec for key in sorted(done) for rec in done[key]]
    return mask, records


def segment_image(image, config: SegConfig | None = None, threads: int = 1):
    """Segment a grayscale or RGB raster; returns ``(foreground_mask, records)``.

    RGB input is converted to BT.601 luma unless ``config.per_channel`` is
    set, in which case each channel is segmented and the masks are OR-ed.
    Records are ordered by top-level block in raster order.
    """
    config = config or SegConfig()
    img = np.asarray(image)
    if img.size == 0:
        raise ParameterError("empty image")
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    if img.ndim == 3:
        if config.per_channel:
            mask = np.zeros(img.shape[:2], dtype=bool)
            records: list = []
            for ch in range(img.shape[2]):
                m, recs = _segment_gray(img[..., ch].astype(float), config, threads)
                mask |= m
                records.extend(recs)
            return mask, records
        img = to_luma(img)
    if img.ndim != 2:
        raise ParameterError(f"expected a 2-D or 3-D raster, got shape {img.shape}")
    return _segment_gray(img.astype(float), config, threads)


def mode_counts(records: Iterable[BlockRecord]) -> dict[str, int]:
    counts = {m.value: 0 for m in Mode}
    for rec in records:
        counts[rec.mode_taken.value] += 1
    return counts


_EIGHT = np.ones((3, 3), dtype=bool)


def postprocess_largest_components(mask, keep: int = 1) -> np.ndarray:
    """Keep the ``keep`` largest 8-connected foreground components.

    Equal sizes are ordered by the raster position of each component's
    first pixel.
    """
    if keep < 1:
        raise ParameterError("keep must be >= 1")
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n <= keep:
        return mask.copy()
    sizes = np.bincount(labels.ravel())[1:]
    # ndimage numbers components in raster order of their first pixel
    order = np.lexsort((np.arange(n), -sizes))
    kept = np.zeros(n + 1, dtype=bool)
    kept[order[:keep] + 1] = True
    return kept[labels]
