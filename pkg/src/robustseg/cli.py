"""Command line front end: ``robustseg segment | palmprint | gen-fixture``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from . import __version__
from ._backend import BACKEND
from .baseline import hierarchical_segment
from .basis import BasisKind
from .errors import FixtureError, NoModelError, NumericalDegeneracyError, ParameterError
from .imageio import overlay, read_image, read_mask, to_luma, write_image, write_mask
from .metrics import compute_metrics
from .ransac import RansacParams
from .segmenter import SegConfig, mode_counts, postprocess_largest_components, segment_image
from .sparse import sparse_segment_image
from .synthgen import make_fixture, save_fixture

__all__ = ["RunReport", "load_config", "build_config", "run_segment", "run_palmprint", "main"]

_SEG_KEYS = {f.name: f.type for f in dataclasses.fields(SegConfig) if f.name != "ransac"}
_RANSAC_KEYS = {f.name: f.type for f in dataclasses.fields(RansacParams)}
# keys that mean something different at segmenter level stay there; the rest go to RANSAC
_RANSAC_ONLY = set(_RANSAC_KEYS) - {"k"}

PALM_PRESET = {"k": 14}


@dataclasses.dataclass
class RunReport:
    method: str
    mode_counts: dict
    foreground_fraction: float
    wall_time: float
    config: dict
    backend: str = BACKEND
    metrics: dict | None = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True, default=str)


def _parse_value(key: str, text: str):
    text = text.strip()
    low = text.lower()
    if key == "basis_kind":
        return BasisKind(low).value
    if low in ("none", "null"):
        return None
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ParameterError(f"cannot parse value {text!r} for {key}") from None


def parse_assignments(lines, source="<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{source}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _SEG_KEYS and key not in _RANSAC_KEYS:
            raise ParameterError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, val)
    return out


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_assignments(fh, source=str(path))


def build_config(values: dict) -> SegConfig:
    seg = {k: v for k, v in values.items() if k in _SEG_KEYS}
    ran = {k: v for k, v in values.items() if k in _RANSAC_ONLY}
    if "ransac_k" in values:
        ran["k"] = values["ransac_k"]
    return SegConfig(ransac=RansacParams(**ran), **seg)


def config_dict(config: SegConfig) -> dict:
    d = dataclasses.asdict(config)
    d["basis_kind"] = config.basis_kind.value
    return d


def _gray(image):
    img = np.asarray(image)
    return to_luma(img) if img.ndim == 3 else img.astype(float)


def run_segment(image, config: SegConfig, method: str = "ransac", threads: int = 1):
    """Return ``(mask, report)`` for one image."""
    t0 = time.perf_counter()
    if method == "ransac":
        mask, records = segment_image(image, config, threads=threads)
        counts = mode_counts(records)
    elif method == "sparse":
        mask, tiles = sparse_segment_image(
            _gray(image), block_size=config.block_size, k=config.k, epsilon2=config.epsilon2,
            epsilon_intercept=config.ransac.epsilon_intercept, epsilon_slope=config.ransac.epsilon_slope)
        counts = {"Sparse": tiles}
    elif method == "kmeans":
        levels = []
        s = config.block_size
        while s >= config.min_block:
            levels.append(s)
            s //= 2
        mask = hierarchical_segment(_gray(image), levels=levels)
        counts = {"KMeans": len(levels)}
    else:
        raise ParameterError(f"unknown method {method!r}")
    elapsed = time.perf_counter() - t0
    report = RunReport(method=method, mode_counts=counts, foreground_fraction=float(np.mean(mask)),
                       wall_time=elapsed, config=config_dict(config))
    return mask, report


def run_palmprint(image, keep: int = 3, config: SegConfig | None = None, threads: int = 1):
    """Segment with the palm preset and keep the largest line components.

    Returns ``(mask, foreground_only, report)``; background pixels of the
    foreground-only image are set to white.
    """
    config = config or SegConfig(**PALM_PRESET)
    mask, report = run_segment(image, config, "ransac", threads)
    mask = postprocess_largest_components(mask, keep)
    img = np.asarray(image, dtype=float)
    fg = np.where(mask[..., None] if img.ndim == 3 else mask, img, 255.0)
    report.foreground_fraction = float(np.mean(mask))
    return mask, fg, report


def _collect(args) -> dict:
    values = load_config(args.config) if args.config else {}
    values.update(parse_assignments(args.set, source="--set"))
    if args.seed is not None:
        values["seed"] = args.seed
    return values


def _add_common(p):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key (repeatable)")
    p.add_argument("--seed", type=int, help="RANSAC seed")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustseg", description="Foreground/background segmentation of images.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment an image into a foreground mask")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="output mask (PGM, 255 = foreground)")
    p.add_argument("--method", choices=("ransac", "sparse", "kmeans"), default="ransac")
    p.add_argument("--truth", help="ground-truth mask; adds precision/recall/F1 to the report")
    p.add_argument("--overlay", help="write an RGB rendering with the foreground tinted")
    _add_common(p)

    p = sub.add_parser("palmprint", help="extract principal lines from a palm image")
    p.add_argument("input")
    p.add_argument("--out-mask", required=True)
    p.add_argument("--out-fg", required=True)
    p.add_argument("--keep", type=int, default=3)
    _add_common(p)

    p = sub.add_parser("gen-fixture", help="write a synthetic image and its truth mask")
    p.add_argument("--recipe", required=True, help="JSON recipe file")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen-fixture":
            with open(args.recipe) as fh:
                recipe = json.load(fh)
            paths = save_fixture(make_fixture(recipe), args.out)
            print(json.dumps(paths, indent=2, sort_keys=True))
            return 0

        image = read_image(args.input)
        if args.command == "segment":
            config = build_config(_collect(args))
            mask, report = run_segment(image, config, args.method, args.threads)
            if args.truth:
                p, r, f = compute_metrics(mask, read_mask(args.truth))
                report.metrics = {"precision": p, "recall": r, "f1": f}
            write_mask(args.out, mask)
            if args.overlay:
                write_image(args.overlay, overlay(image, mask))
        else:
            config = build_config({**PALM_PRESET, **_collect(args)})
            mask, fg, report = run_palmprint(image, args.keep, config, args.threads)
            write_mask(args.out_mask, mask)
            write_image(args.out_fg, fg)
        print(report.to_json())
        return 0
    except (OSError, ValueError, json.JSONDecodeError, FixtureError, NoModelError,
            NumericalDegeneracyError, ArithmeticError, KeyError, TypeError) as exc:
        print(f"robustseg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
