import numpy as np
import pytest
from hypothesis import given, strategies as st

from robustseg.baseline import hierarchical_segment, kmeans2, optimal_split, within_sse
from robustseg.errors import ParameterError
from robustseg.metrics import compute_metrics
from robustseg.synthgen import plant_foreground, ramp_image

from oracles import threshold_scan_sse

blocks = st.integers(0, 10**6).map(lambda s: np.random.default_rng(s).integers(0, 256, (8, 8)).astype(float))


def test_bimodal_block():
    b = np.where(np.eye(8, dtype=bool), 0.0, 255.0)
    fg, bg, m = kmeans2(b)
    assert (fg, bg) == (0, 255)
    np.testing.assert_array_equal(m, np.eye(8, dtype=bool))


def test_constant_block_degenerate():
    fg, bg, m = kmeans2(np.full((8, 8), 9.0))
    assert fg == bg == 9 and not m.any()


@given(blocks)
def test_matches_threshold_scan_oracle(b):
    _, _, m = kmeans2(b)
    assert within_sse(b, m) == pytest.approx(threshold_scan_sse(b), abs=1e-6)


@given(blocks)
def test_optimal_split_centroids(b):
    lo, hi = optimal_split(b)
    _, _, m = kmeans2(b)
    assert lo <= hi
    assert b[m].mean() == pytest.approx(lo) and b[~m].mean() == pytest.approx(hi)


@given(blocks, st.floats(0, 255), st.floats(0, 255))
def test_lloyd_sse_non_increasing(b, a, c):
    sse = [within_sse(b, kmeans2(b, init=(a, c), max_iters=i)[2]) for i in range(1, 8)]
    assert all(y <= x + 1e-9 for x, y in zip(sse, sse[1:]))


@given(blocks, st.integers(0, 10**6))
def test_permutation_stability(b, seed):
    perm = np.random.default_rng(seed).permutation(64)
    _, _, m = kmeans2(b)
    _, _, mp = kmeans2(b.ravel()[perm].reshape(8, 8))
    np.testing.assert_array_equal(mp.ravel(), m.ravel()[perm])


def test_constant_image_background():
    assert not hierarchical_segment(np.full((128, 128), 140.0)).any()


def test_easy_text_on_flat_background():
    fx = plant_foreground(np.full((128, 128), 220.0), coverage=0.08, contrast=150, shape="glyphs", seed=1, sign="-")
    assert compute_metrics(hierarchical_segment(fx.image), fx.truth)[2] >= 0.9


def test_ramp_failure_mode():
    assert hierarchical_segment(ramp_image()).mean() >= 0.2


def test_rgb_and_validation():
    img = np.zeros((16, 16, 3))
    assert hierarchical_segment(img, levels=(16, 8)).shape == (16, 16)
    for kw in [dict(levels=()), dict(levels=(8, 16)), dict(levels=(64, 24)), dict(blend=2)]:
        with pytest.raises(ParameterError):
            hierarchical_segment(np.zeros((64, 64)), **kw)
