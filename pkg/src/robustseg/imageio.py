"""Raster I/O: netpbm (PGM/PPM) natively, other formats through Pillow.

Masks are stored as binary PGM with 0 for background and 255 for
foreground.
"""
from __future__ import annotations

import os
import re

import numpy as np

__all__ = [
    "to_luma",
    "read_pnm",
    "write_pnm",
    "read_image",
    "write_image",
    "read_mask",
    "write_mask",
    "overlay",
]

_PNM_MAGIC = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}
_SKIP = re.compile(rb"\s*(#[^\n]*\n\s*)*")
_TOKEN = re.compile(rb"\S+")


def to_luma(rgb) -> np.ndarray:
    """BT.601 luma rounded to integers in [0, 255]."""
    rgb = np.asarray(rgb, dtype=float)
    y = rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114
    return np.clip(np.floor(y + 0.5), 0, 255)


def _tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    while len(out) < count:
        pos = _SKIP.match(data, pos).end()
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ValueError("truncated netpbm header")
        out.append(m.group())
        pos = m.end()
    return out, pos


def read_pnm(path) -> np.ndarray:
    """Read a P2/P3/P5/P6 file into a uint8 array.

    Grayscale files give ``(H, W)``, colour files ``(H, W, 3)``. Values are
    rescaled to 0..255 when maxval is not 255.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in _PNM_MAGIC:
        raise ValueError(f"{path}: not a PGM/PPM file")
    channels, binary = _PNM_MAGIC[magic]
    (w, h, maxval), pos = _tokens(data, 3, 2)
    w, h, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad maxval {maxval}")
    count = w * h * channels
    if binary:
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    else:
        raw = np.array(data[pos:].split()[:count], dtype=np.int64)
        if raw.size < count:
            raise ValueError(f"{path}: truncated pixel data")
    arr = raw.astype(np.int64)
    if maxval != 255:
        arr = np.floor(arr * 255.0 / maxval + 0.5).astype(np.int64)
    arr = arr.astype(np.uint8)
    return arr.reshape(h, w, 3) if channels == 3 else arr.reshape(h, w)


def write_pnm(path, image) -> None:
    """Write binary PGM (2-D) or PPM (``H x W x 3``) with maxval 255."""
    arr = np.asarray(image)
    arr = np.clip(np.floor(arr.astype(float) + 0.5), 0, 255).astype(np.uint8)
    if arr.ndim == 2:
        magic = b"P5"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot write array of shape {arr.shape} as netpbm")
    h, w = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"%s\n%d %d\n255\n" % (magic, w, h))
        fh.write(arr.tobytes())


def _is_pnm(path) -> bool:
    return os.path.splitext(str(path))[1].lower() in {".pgm", ".ppm", ".pnm"}


def read_image(path) -> np.ndarray:
    path = os.fspath(path)
    if _is_pnm(path):
        return read_pnm(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head in _PNM_MAGIC:
        return read_pnm(path)
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if "A" in im.mode or im.mode in ("P", "CMYK") else "L")
        return np.asarray(im)


def write_image(path, image) -> None:
    path = os.fspath(path)
    if _is_pnm(path):
        write_pnm(path, image)
        return
    from PIL import Image

    arr = np.clip(np.floor(np.asarray(image, dtype=float) + 0.5), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


def write_mask(path, mask) -> None:
    write_pnm(path, np.where(np.asarray(mask, dtype=bool), 255, 0))


def read_mask(path) -> np.ndarray:
    img = read_image(path)
    if img.ndim == 3:
        img = img.max(axis=2)
    return img > 127


def overlay(image, mask, color=(255, 0, 0), strength: float = 0.6) -> np.ndarray:
    """RGB rendering of ``image`` with foreground pixels tinted by ``color``."""
    img = np.asarray(image, dtype=float)
    if img.ndim == 2:
        img = np.repeat(img[..., None], 3, axis=2)
    out = img.copy()
    m = np.asarray(mask, dtype=bool)
    out[m] = (1 - strength) * img[m] + strength * np.asarray(color, dtype=float)
    return out
