import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robustseg import segmenter
from robustseg.basis import make_basis, make_dct_basis
from robustseg.errors import NoModelError, ParameterError
from robustseg.fitting import fit_least_squares
from robustseg.metrics import compute_metrics
from robustseg.ransac import RansacParams
from robustseg.segmenter import (BlockRecord, FlatDecision, Mode, SegConfig, _ColorMap, flat_check, mode_counts,
                                 neighbor_backgrounds, postprocess_largest_components, segment_block,
                                 segment_image, text_over_constant_check)
from robustseg.synthgen import gen_smooth_background, plant_foreground, two_model_block

FAST = SegConfig(ransac=RansacParams(max_iters=200))


# flat blocks

def test_flat_close_neighbor_is_background():
    assert flat_check(np.full((8, 8), 137), [140]) is FlatDecision.ALL_BACKGROUND


def test_flat_far_neighbors_is_foreground():
    assert flat_check(np.full((8, 8), 137), [100, 160]) is FlatDecision.ALL_FOREGROUND


def test_flat_tolerance_is_strict():
    assert flat_check(np.full((4, 4), 137), [147]) is FlatDecision.ALL_FOREGROUND


def test_two_values_not_flat():
    b = np.full((8, 8), 10)
    b[0, 0] = 11
    assert flat_check(b, [10]) is FlatDecision.NOT_FLAT


def test_flat_any_neighbor_suffices():
    assert flat_check(np.full((8, 8), 200), {195, 60}) is FlatDecision.ALL_BACKGROUND


def test_flat_without_neighbors_defaults_to_background():
    assert flat_check(np.full((8, 8), 200), []) is FlatDecision.ALL_BACKGROUND
    assert flat_check(np.full((8, 8), 200), [], default_background=False) is FlatDecision.ALL_FOREGROUND


# text over constant background

def three_color_block():
    vals = np.array([0] * 70 + [255] * 25 + [128] * 5)
    return np.random.default_rng(0).permutation(vals).reshape(10, 10)


def test_text_three_colors():
    res = text_over_constant_check(three_color_block(), [2])
    assert res.background_color == 0
    assert res.mask.mean() == pytest.approx(0.30)


def test_text_prefers_neighbor_consistent_color():
    res = text_over_constant_check(three_color_block(), [250])
    assert res.background_color == 255
    assert res.mask.mean() == pytest.approx(0.75)


def test_text_falls_back_to_most_frequent():
    assert text_over_constant_check(three_color_block(), [60]).background_color == 0
    assert text_over_constant_check(three_color_block(), []).background_color == 0


def test_text_tie_goes_to_darker():
    b = np.array([[30, 200], [200, 30]])
    assert text_over_constant_check(b, []).background_color == 30


def test_text_gates():
    many = np.arange(40).reshape(5, 8) * 5
    assert text_over_constant_check(many, []) is None
    four = np.array([[100, 110], [120, 130]])
    assert text_over_constant_check(four, []) is None


# neighbours

def rec(origin, size, color, mode=Mode.SMOOTH):
    return BlockRecord(origin, size, mode, color)


def test_top_left_block_has_no_neighbors():
    assert neighbor_backgrounds((0, 0), (8, 8), [rec((0, 8), (8, 8), 5), rec((8, 0), (8, 8), 6)]) == set()


def test_interior_four_causal_neighbors():
    recs = [rec((0, 0), (8, 8), 1), rec((0, 8), (8, 8), 2), rec((0, 16), (8, 8), 3),
            rec((8, 0), (8, 8), 4), rec((8, 16), (8, 8), 9), rec((16, 8), (8, 8), 9)]
    assert neighbor_backgrounds((8, 8), (8, 8), recs) == {1, 2, 3, 4}


def test_foreground_and_split_records_contribute_nothing():
    recs = [rec((0, 0), (8, 8), None, Mode.FLAT), rec((0, 8), (8, 8), 7, Mode.SPLIT), rec((8, 0), (8, 8), 3)]
    assert neighbor_backgrounds((8, 8), (8, 8), recs) == {3}


def test_foreground_top_neighbor_from_segmentation():
    # top block is a lone flat block far from any background -> foreground, no colour
    img = np.full((16, 8), 50.0)
    img[:8] = 50
    cfg = SegConfig(block_size=8, min_block=8)
    _, records = segment_image(img, cfg)
    assert records[0].mode_taken is Mode.FLAT and records[0].background_color == 50
    recs = [BlockRecord((0, 0), (8, 8), Mode.FLAT, None)]
    assert neighbor_backgrounds((8, 0), (8, 8), recs) == set()


def random_tiling(rng, size=32, min_block=4):
    out = []

    def go(r, c, s):
        if s > min_block and rng.random() < 0.6:
            h = s // 2
            for dr in (0, h):
                for dc in (0, h):
                    go(r + dr, c + dc, h)
        else:
            color = None if rng.random() < 0.2 else int(rng.integers(0, 20))
            out.append(BlockRecord((r, c), (s, s), Mode.SMOOTH, color))

    for r in range(0, size * 2, size):
        for c in range(0, size * 2, size):
            go(r, c, size)
    return out


@given(st.integers(0, 10**6))
def test_color_map_matches_record_scan(seed):
    rng = np.random.default_rng(seed)
    recs = random_tiling(rng)
    cmap = _ColorMap((64, 64))
    cmap.commit(recs)
    for _ in range(20):
        s = int(rng.choice([4, 8, 16]))
        r, c = (int(v) * s for v in rng.integers(0, 64 // s, 2))
        assert cmap.lookup((r, c), (s, s)) == neighbor_backgrounds((r, c), (s, s), recs)


# whole images

def test_uniform_image_all_flat():
    mask, records = segment_image(np.full((128, 96), 77.0))
    assert not mask.any()
    assert {r.mode_taken for r in records} == {Mode.FLAT}


def test_diagonal_gradient_all_smooth():
    # a ramp is only approximately in the DCT span; its K=10 error grows with the
    # per-block slope, so the image is large enough to keep it under epsilon2
    x, y = np.mgrid[0:256, 0:256]
    img = np.round(200 * (x + y) / 510)
    mask, records = segment_image(img)
    assert not mask.any()
    assert {r.mode_taken for r in records} == {Mode.SMOOTH}


def glyph_fixture(seed=0, size=128):
    bg = gen_smooth_background(size, size, k=3, alpha_scale=0.5, seed=seed, low=60, high=200)
    return plant_foreground(bg, coverage=0.1, contrast=80, shape="glyphs", seed=seed + 1)


def test_gradient_with_glyphs_f1():
    fx = glyph_fixture()
    mask, _ = segment_image(fx.image)
    assert compute_metrics(mask, fx.truth)[2] >= 0.95


def test_two_model_block_splits():
    img, truth = two_model_block(0)
    mask, own = segment_block(img, config=SegConfig())
    assert own.mode_taken is Mode.SPLIT
    assert np.count_nonzero(mask != truth) <= 0.01 * truth.size


def leaves(records):
    return [r for r in records if r.is_leaf]


@pytest.mark.parametrize("shape", [(128, 128), (70, 100)])
def test_leaves_tile_image_exactly_once(shape):
    bg = gen_smooth_background(shape[1], shape[0], k=3, seed=4)
    fx = plant_foreground(bg, coverage=0.1, contrast=80, shape="glyphs", seed=5)
    cfg = SegConfig()
    mask, records = segment_image(fx.image, cfg)
    assert mask.shape == shape
    cover = np.zeros(shape, int)
    for r in leaves(records):
        cover[r.origin[0]:r.origin[0] + r.size[0], r.origin[1]:r.origin[1] + r.size[1]] += 1
        assert r.depth <= cfg.max_depth
    assert (cover == 1).all()


def test_mode_precedence_guards():
    fx = glyph_fixture(seed=3)
    img = fx.image.copy()
    img[:64, :64] = 90
    img[64:, 64:] = np.where(fx.truth[64:, 64:], 0, 200)
    cfg = SegConfig(ransac=RansacParams(max_iters=200))
    _, records = segment_image(img, cfg)
    assert len({r.mode_taken for r in records}) >= 3
    for r in leaves(records):
        px = img[r.origin[0]:r.origin[0] + r.size[0], r.origin[1]:r.origin[1] + r.size[1]]
        flat = np.all(px == px.flat[0])
        if r.mode_taken is Mode.FLAT:
            assert flat
            continue
        assert not flat
        smooth = fit_least_squares(px, make_basis(px.shape, min(cfg.k, px.size))).max_residual < cfg.epsilon2
        if r.mode_taken is Mode.SMOOTH:
            continue
        assert not smooth
        text = text_over_constant_check(px, [], cfg) is not None
        if r.mode_taken is Mode.TEXT_OVER_CONSTANT:
            assert text
        else:
            assert not text


@settings(max_examples=15)
@given(st.integers(0, 255), st.sampled_from([8, 16, 32, 64]), st.integers(1, 80), st.integers(1, 80))
def test_constant_images_are_background(value, block, h, w):
    mask, _ = segment_image(np.full((h, w), float(value)), SegConfig(block_size=block, min_block=min(8, block)))
    assert not mask.any()


@pytest.mark.parametrize("seed", range(3))
def test_split_never_hurts_on_two_model_blocks(seed):
    img, truth = two_model_block(seed)
    with_split, _ = segment_block(img, config=SegConfig())
    without, _ = segment_block(img, config=SegConfig(min_block=64))
    assert np.count_nonzero(with_split != truth) <= np.count_nonzero(without != truth)


def test_deterministic_and_thread_independent():
    fx = glyph_fixture(seed=2)
    a, ra = segment_image(fx.image, FAST)
    b, rb = segment_image(fx.image, FAST)
    c, rc = segment_image(fx.image, FAST, threads=4)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)
    assert ra == rb == rc


def test_rgb_input():
    fx = glyph_fixture()
    rgb = np.repeat(fx.image[..., None], 3, axis=2)
    mask, _ = segment_image(rgb, FAST)
    np.testing.assert_array_equal(mask, segment_image(fx.image, FAST)[0])
    per, recs = segment_image(rgb, SegConfig(per_channel=True, ransac=RansacParams(max_iters=200)))
    assert per.shape == mask.shape and len(recs) > 0


def test_degenerate_at_min_block_uses_least_squares(monkeypatch):
    def fail(*a, **k):
        raise NoModelError("forced")

    monkeypatch.setattr(segmenter, "ransac_segment", fail)
    img = np.round(np.random.default_rng(0).uniform(0, 255, (16, 16)))
    records = []
    segment_block(img, config=SegConfig(block_size=16, min_block=8), records=records)
    assert [r.mode_taken for r in records] == [Mode.RANSAC] * 4 + [Mode.SPLIT]


def test_config_validation():
    for kw in [dict(min_block=0), dict(block_size=48, min_block=8), dict(block_size=4, min_block=8),
               dict(epsilon3=1.5), dict(k=0)]:
        with pytest.raises(ParameterError):
            SegConfig(**kw)
    assert SegConfig().max_depth == 3


def test_mode_counts_sum():
    _, records = segment_image(glyph_fixture().image, FAST)
    counts = mode_counts(records)
    assert sum(counts.values()) == len(records)


# connected components

def test_components_single_unchanged():
    m = np.zeros((10, 10), bool)
    m[2:5, 2:5] = True
    np.testing.assert_array_equal(postprocess_largest_components(m, 1), m)


def test_components_keep_largest():
    m = np.zeros((20, 20), bool)
    m[0:5, 0:10] = True
    m[15:18, 15] = True
    out = postprocess_largest_components(m, 1)
    assert out.sum() == 50 and not out[15:18, 15].any()


def test_components_empty_and_diagonal():
    assert not postprocess_largest_components(np.zeros((5, 5), bool), 2).any()
    diag = np.eye(6, dtype=bool)  # one component under 8-connectivity
    np.testing.assert_array_equal(postprocess_largest_components(diag, 1), diag)
    with pytest.raises(ParameterError):
        postprocess_largest_components(diag, 0)


def test_sub_blocks_see_earlier_siblings():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (16, 16)).astype(float)
    img[:8, :8] = 100
    img[np.arange(8), np.arange(8)] = 0  # two colours: text over a 100 background
    img[:8, 8:] = 160  # flat, and far from its only neighbour's background
    cfg = SegConfig(block_size=16, min_block=8, epsilon3=0.9)
    mask, records = segment_image(img, cfg)
    by_origin = {r.origin: r for r in records if r.is_leaf}
    assert by_origin[(0, 0)].mode_taken is Mode.TEXT_OVER_CONSTANT
    assert by_origin[(0, 0)].background_color == 100
    assert by_origin[(0, 8)].mode_taken is Mode.FLAT and by_origin[(0, 8)].background_color is None
    assert mask[:8, 8:].all()
