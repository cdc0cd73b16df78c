"""Synthetic images with known foreground for tests and benchmarks.

A fixture is an intensity image, the exact mask of planted foreground
pixels, and the recipe that regenerates both. Recipes carry
``FIXTURE_VERSION``; bump it whenever generation changes so stored
expectations are never silently compared against different pixels.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .basis import make_basis, make_dct_basis
from .errors import FixtureError, ParameterError
from .imageio import read_image, read_mask, write_image, write_mask

__all__ = [
    "FIXTURE_VERSION",
    "Fixture",
    "gen_smooth_background",
    "plant_foreground",
    "make_fixture",
    "save_fixture",
    "load_fixture",
    "smooth_block",
    "outlier_block",
    "two_model_block",
    "ramp_image",
    "low_contrast_text",
    "spike_block",
    "palm_fixture",
]

FIXTURE_VERSION = 1
SHAPES = ("glyphs", "strokes", "speckle")


@dataclass
class Fixture:
    image: np.ndarray
    truth: np.ndarray
    recipe: dict = field(default_factory=dict)


def _quantize(x):
    return np.clip(np.floor(x + 0.5), 0, 255)


def _normalized_field(shape, k, rng):
    """Random zero-DC combination of the first k DCT modes scaled to [0, 1]."""
    if k <= 1:
        return np.zeros(shape)
    basis = make_basis(shape, k)
    w = rng.normal(size=k)
    w[0] = 0.0
    field_ = (basis.design @ w).reshape(shape)
    span = np.ptp(field_)
    return (field_ - field_.min()) / span if span > 0 else np.zeros(shape)


def gen_smooth_background(width: int, height: int, k: int = 3, alpha_scale: float = 0.5,
                          seed: int = 0, kind: str = "global", block_size: int = 64,
                          noise_sigma: float = 0.0, low: float = 20.0, high: float = 235.0) -> np.ndarray:
    """Smoothly varying integer-valued background.

    ``kind`` selects one model over the whole image (``"global"``), an
    independent model per ``block_size`` tile (``"blocks"``), or a
    horizontal linear ramp from ``low`` to ``high`` (``"ramp"``). For the
    first two the variation spans ``alpha_scale * (high - low)`` at a
    random offset inside ``[low, high]``.
    """
    if not 1 <= k <= 10:
        raise ParameterError("k must be in [1, 10]")
    if not 0 <= alpha_scale <= 1:
        raise ParameterError("alpha_scale must be in [0, 1]")
    if width < 1 or height < 1:
        raise ParameterError("image must be non-empty")
    rng = np.random.default_rng(seed)
    span = high - low
    if kind == "ramp":
        out = np.tile(np.linspace(low, high, width), (height, 1))
    elif kind in ("global", "blocks"):
        tiles = [(0, 0, height, width)] if kind == "global" else [
            (r, c, min(block_size, height - r), min(block_size, width - c))
            for r in range(0, height, block_size) for c in range(0, width, block_size)
        ]
        out = np.empty((height, width))
        for r, c, h, w in tiles:
            amp = alpha_scale * span
            offset = low + rng.uniform(0, span - amp)
            out[r:r + h, c:c + w] = offset + amp * _normalized_field((h, w), min(k, h * w), rng)
    else:
        raise ParameterError(f"unknown background kind {kind!r}")
    if noise_sigma > 0:
        out = out + rng.normal(0, noise_sigma, out.shape)
    return _quantize(out)


def _line(mask, r0, c0, r1, c1, thickness):
    n = int(max(abs(r1 - r0), abs(c1 - c0))) + 1
    rr = np.rint(np.linspace(r0, r1, n)).astype(int)
    cc = np.rint(np.linspace(c0, c1, n)).astype(int)
    for dr in range(thickness):
        for dc in range(thickness):
            r, c = rr + dr, cc + dc
            ok = (r >= 0) & (r < mask.shape[0]) & (c >= 0) & (c < mask.shape[1])
            mask[r[ok], c[ok]] = True


def _glyph(shape, rng):
    gh = int(rng.integers(6, 13))
    gw = max(3, int(gh * rng.uniform(0.5, 0.8)))
    r0 = int(rng.integers(0, max(1, shape[0] - gh)))
    c0 = int(rng.integers(0, max(1, shape[1] - gw)))
    m = np.zeros(shape, dtype=bool)
    thick = int(rng.integers(1, 3))
    for _ in range(int(rng.integers(2, 5))):
        a, b = rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
        _line(m, r0 + a[0] * (gh - 1), c0 + a[1] * (gw - 1), r0 + b[0] * (gh - 1), c0 + b[1] * (gw - 1), thick)
    return m


def _curve(shape, rng, thickness=None, rows=None):
    """Quadratic Bezier stroke; ``rows`` limits its vertical band."""
    h, w = shape
    lo, hi = rows if rows is not None else (0, h - 1)
    pts = np.column_stack([rng.uniform(lo, hi, 3), np.sort(rng.uniform(0, w - 1, 3))])
    pts[0, 1], pts[2, 1] = rng.uniform(0, 0.2 * w), rng.uniform(0.8 * w, w - 1)
    t = np.linspace(0, 1, 4 * (h + w))[:, None]
    curve = (1 - t) ** 2 * pts[0] + 2 * (1 - t) * t * pts[1] + t**2 * pts[2]
    m = np.zeros(shape, dtype=bool)
    thick = thickness or int(rng.integers(1, 4))
    for (ra, ca), (rb, cb) in zip(curve[:-1], curve[1:]):
        _line(m, ra, ca, rb, cb, thick)
    return m


def plant_foreground(background, coverage: float, contrast: float, shape: str = "glyphs",
                     seed: int = 0, sign: str = "auto") -> Fixture:
    """Overlay synthetic shapes and record exactly which pixels changed.

    Each planted pixel becomes ``background +/- contrast``. ``sign`` is
    ``"+"``, ``"-"``, ``"random"`` (per shape) or ``"auto"`` (per shape,
    towards the side with more headroom). Shapes are added until
    ``round(coverage * pixels)`` pixels are covered, trimming the last one.
    Raises FixtureError if clamping to [0, 255] would cut a pixel's
    contrast below half the request.
    """
    if not 0 < coverage < 0.5:
        raise ParameterError("coverage must be in (0, 0.5)")
    if contrast <= 0:
        raise ParameterError("contrast must be positive")
    if shape not in SHAPES:
        raise ParameterError(f"shape must be one of {SHAPES}")
    if sign not in ("auto", "+", "-", "random"):
        raise ParameterError(f"bad sign {sign!r}")
    bg = np.asarray(background, dtype=float)
    rng = np.random.default_rng(seed)
    H, W = bg.shape
    target = int(round(coverage * H * W))
    truth = np.zeros((H, W), dtype=bool)
    offset = np.zeros((H, W))

    def direction(pix):
        if sign == "+":
            return 1.0
        if sign == "-":
            return -1.0
        if sign == "random":
            return float(rng.choice([-1.0, 1.0]))
        return 1.0 if bg[pix].mean() < 127.5 else -1.0

    if shape == "speckle":
        flat = rng.choice(H * W, size=target, replace=False)
        pix = np.unravel_index(flat, (H, W))
        truth[pix] = True
        signs = np.array([direction((r, c)) for r, c in zip(*pix)])
        offset[pix] = signs * contrast
    else:
        make = _glyph if shape == "glyphs" else _curve
        count = 0
        for _ in range(100000):
            if count >= target:
                break
            new = make((H, W), rng) & ~truth
            idx = np.flatnonzero(new)
            if idx.size == 0:
                continue
            idx = idx[:target - count]
            pix = np.unravel_index(idx, (H, W))
            truth[pix] = True
            offset[pix] = direction(pix) * contrast
            count += idx.size
        else:
            raise FixtureError("could not reach requested coverage")

    image = bg + offset
    clipped = np.clip(image, 0, 255)
    achieved = np.abs(clipped - bg)[truth]
    if achieved.size and achieved.min() < 0.5 * contrast:
        raise FixtureError("clamping reduced contrast below half of the request")
    recipe = {"coverage": coverage, "contrast": contrast, "shape": shape, "seed": seed, "sign": sign}
    return Fixture(image=_quantize(clipped), truth=truth, recipe=recipe)


def make_fixture(recipe: dict) -> Fixture:
    """Build a fixture from a recipe dictionary (the serialized manifest).

    Recognized keys: ``width``, ``height``, ``seed``, ``background`` (keyword
    arguments of gen_smooth_background) and an optional ``foreground``
    (keyword arguments of plant_foreground). ``{"kind": "palm", ...}``
    builds palm_fixture instead.
    """
    recipe = dict(recipe)
    version = recipe.get("version", FIXTURE_VERSION)
    if version != FIXTURE_VERSION:
        raise FixtureError(f"recipe version {version} is not supported (expected {FIXTURE_VERSION})")
    seed = int(recipe.get("seed", 0))
    if recipe.get("kind") == "palm":
        fx = palm_fixture(size=int(recipe.get("width", 256)), n_lines=int(recipe.get("n_lines", 3)), seed=seed)
        fx.recipe = {**recipe, "version": FIXTURE_VERSION}
        return fx
    width, height = int(recipe["width"]), int(recipe["height"])
    bg_args = dict(recipe.get("background", {}))
    bg = gen_smooth_background(width, height, seed=seed, **bg_args)
    fg_args = recipe.get("foreground")
    if fg_args:
        fx = plant_foreground(bg, seed=seed + 1, **fg_args)
    else:
        fx = Fixture(image=bg, truth=np.zeros(bg.shape, dtype=bool))
    fx.recipe = {**recipe, "version": FIXTURE_VERSION}
    return fx


def save_fixture(fixture: Fixture, out_dir) -> dict:
    """Write ``image.pgm``, ``truth.pgm`` and ``recipe.json`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name) for name in ("image.pgm", "truth.pgm", "recipe.json")}
    write_image(paths["image.pgm"], fixture.image)
    write_mask(paths["truth.pgm"], fixture.truth)
    with open(paths["recipe.json"], "w") as fh:
        json.dump({**fixture.recipe, "version": fixture.recipe.get("version", FIXTURE_VERSION)}, fh, indent=2,
                  sort_keys=True)
    return paths


def load_fixture(out_dir) -> Fixture:
    with open(os.path.join(out_dir, "recipe.json")) as fh:
        recipe = json.load(fh)
    return Fixture(
        image=read_image(os.path.join(out_dir, "image.pgm")).astype(float),
        truth=read_mask(os.path.join(out_dir, "truth.pgm")),
        recipe=recipe,
    )


# Named fixture families. Each is a pure function of its seed.

def smooth_block(seed: int, n: int = 64, max_modes: int = 6, noise_sigma: float = 1.0) -> np.ndarray:
    """Up to ``max_modes`` of the ten lowest zigzag DCT modes plus Gaussian noise."""
    rng = np.random.default_rng([FIXTURE_VERSION, 11, seed])
    basis = make_dct_basis(n, 10)
    m = int(rng.integers(1, max_modes + 1))
    modes = rng.choice(np.arange(1, 10), size=m - 1, replace=False) if m > 1 else []
    w = np.zeros(10)
    w[list(modes)] = rng.normal(size=len(modes))
    shape = basis.design @ w
    span = np.ptp(shape)
    amp = rng.uniform(20, 180)
    shape = shape / span * amp if span > 0 else shape
    level = rng.uniform(10 - shape.min(), 245 - shape.max())
    img = (shape + level).reshape(n, n) + rng.normal(0, noise_sigma, (n, n))
    return _quantize(img)


def _linear_gradient(n, g, rng):
    theta = rng.uniform(0, 2 * np.pi)
    x, y = np.mgrid[0:n, 0:n] / (n - 1)
    ramp = np.cos(theta) * x + np.sin(theta) * y
    return (ramp - ramp.min()) / np.ptp(ramp) * g


def outlier_block(seed: int, n: int = 64, fraction: float = 0.15):
    """Gradient block with a ``fraction`` of speckle outliers at >= 3x the RANSAC threshold.

    Returns ``(image, truth, contrast)``. The gradient range g and contrast c
    satisfy ``c >= 3 * (1 + 0.22 * (g + c))``, so the contrast clears three
    times the threshold computed from the block's own range.
    """
    rng = np.random.default_rng([FIXTURE_VERSION, 4, seed])
    g = rng.uniform(10, 40)
    # +1 level of quantization slack on the gradient range
    c = float(np.ceil((3 + 0.66 * (g + 1)) / 0.34))
    up = bool(rng.integers(2))
    base = rng.uniform(5, 250 - g - c)
    if not up:
        base += c
    bg = _quantize(base + _linear_gradient(n, g, rng))
    truth = np.zeros(n * n, dtype=bool)
    truth[rng.choice(n * n, size=int(round(fraction * n * n)), replace=False)] = True
    truth = truth.reshape(n, n)
    img = bg + np.where(truth, c if up else -c, 0.0)
    eps = 1 + 0.22 * np.ptp(img)
    if c < 3 * eps or img.min() < 0 or img.max() > 255:
        raise FixtureError("outlier fixture violates its contrast contract")
    return img, truth, c


def two_model_block(seed: int, n: int = 64, fraction: float = 0.15, contrast: float = 80.0):
    """Block whose two halves follow unrelated smooth models, with speckle foreground.

    One half varies across its columns, the other along its rows, each as
    the third DCT mode of an ``n/2`` block, so every quadrant is exactly a
    low-order model while the full block is not. Both halves share a
    mid-grey level and a large swing; foreground is pushed toward mid-grey
    so it never widens the block's range. Returns ``(image, truth)``; the
    halves are left/right or top/bottom at random.
    """
    rng = np.random.default_rng([FIXTURE_VERSION, 7, seed])
    half = n // 2
    img = np.zeros((n, n))
    truth = np.zeros((n, n), dtype=bool)
    across = np.cos((2 * np.arange(half) + 1) * np.pi * 3 / (2 * half))
    along = np.cos((2 * np.arange(n) + 1) * np.pi * 6 / (2 * n))
    for i in range(2):
        amp = rng.uniform(150, 190)
        level = rng.uniform(118, 138)
        if i == 0:
            tilt = rng.uniform(-5, 5) * np.arange(n)[:, None] / (n - 1)
            bg = level + amp / 2 * across[None, :] + tilt
        else:
            bg = level + amp / 2 * np.repeat(along[:, None], half, axis=1)
        fg = np.zeros(n * half, dtype=bool)
        fg[rng.choice(n * half, size=int(round(fraction * n * half)), replace=False)] = True
        fg = fg.reshape(n, half)
        toward_mid = np.where(bg > level, -contrast, contrast)
        img[:, i * half:(i + 1) * half] = _quantize(bg + np.where(fg, toward_mid, 0.0))
        truth[:, i * half:(i + 1) * half] = fg
    if rng.integers(2):
        img, truth = img.T.copy(), truth.T.copy()
    return img, truth


def ramp_image(width: int = 256, height: int = 256) -> np.ndarray:
    """Horizontal ramp from 0 to 255 with no foreground."""
    return gen_smooth_background(width, height, kind="ramp", low=0, high=255)


def low_contrast_text(seed: int = 0, size: int = 256, contrast: float = 15.0,
                      coverage: float = 0.06) -> Fixture:
    """Glyphs only ``contrast`` levels away from a gently varying background.

    Glyph polarity is random per glyph, so some text is lighter and some
    darker than the background it sits on.
    """
    bg = gen_smooth_background(size, size, k=3, alpha_scale=0.25, seed=seed, kind="global", low=60, high=200)
    fx = plant_foreground(bg, coverage=coverage, contrast=contrast, shape="glyphs", seed=seed + 1, sign="random")
    fx.recipe = {"family": "low_contrast_text", "seed": seed, "size": size, "contrast": contrast,
                 "coverage": coverage, "version": FIXTURE_VERSION}
    return fx


def spike_block(seed: int, n: int = 8, k: int = 4, spike: float = 100.0, noise_sigma: float = 0.5):
    """Exact-model block plus Gaussian noise and one spike; returns ``(image, index)``."""
    rng = np.random.default_rng([FIXTURE_VERSION, 9, seed])
    basis = make_dct_basis(n, k)
    w = rng.normal(0, 15, k)
    w[0] = 100.0 * n
    img = basis.design @ w + rng.normal(0, noise_sigma, n * n)
    idx = int(rng.integers(n * n))
    img[idx] += spike
    return img.reshape(n, n), idx


def palm_fixture(size: int = 256, n_lines: int = 3, seed: int = 0, contrast: float = 45.0) -> Fixture:
    """Textured background crossed by ``n_lines`` dark, separated curves."""
    rng = np.random.default_rng([FIXTURE_VERSION, 13, seed])
    bg = gen_smooth_background(size, size, k=6, alpha_scale=0.3, seed=seed, kind="global",
                               noise_sigma=1.0, low=120, high=220)
    truth = np.zeros((size, size), dtype=bool)
    band = size / n_lines
    for i in range(n_lines):
        lo = i * band + 0.25 * band
        truth |= _curve((size, size), rng, thickness=3, rows=(lo, lo + 0.5 * band - 3))
    image = _quantize(bg - np.where(truth, contrast, 0.0))
    recipe = {"kind": "palm", "width": size, "n_lines": n_lines, "seed": seed, "contrast": contrast,
              "version": FIXTURE_VERSION}
    return Fixture(image=image, truth=truth, recipe=recipe)
