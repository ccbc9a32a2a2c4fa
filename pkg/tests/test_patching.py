import math

import numpy as np
import pytest

from spmiml.core import EmptyInputError, ParseError
from spmiml.patching import (DROP_PARTIAL, ZERO_PAD, PatchSpec, RasterImage, feature_dim,
                             featurize, image_to_bag, partition, read_pnm, write_pnm)


def blank(w, h, c=1):
    return RasterImage(np.zeros((h, w, c)))


@pytest.mark.parametrize("w,h,size,expected", [
    (896, 896, 448, 4),
    (1000, 900, 448, 4),
    (448, 448, 448, 1),
])
def test_partition_counts(w, h, size, expected):
    assert len(partition(blank(w, h), PatchSpec(size))) == expected


def test_single_patch_equals_image():
    rng = np.random.default_rng(0)
    img = RasterImage(rng.random((448, 448, 1)))
    (patch,) = partition(img, PatchSpec(448))
    np.testing.assert_array_equal(patch, img.pixels)


def test_row_major_order():
    px = np.zeros((16, 24, 1))
    for r in range(2):
        for c in range(3):
            px[r * 8:(r + 1) * 8, c * 8:(c + 1) * 8] = (r * 3 + c) / 10
    patches = partition(RasterImage(px), PatchSpec(8))
    assert [p[0, 0, 0] for p in patches] == [i / 10 for i in range(6)]


def test_zero_pad_extends_with_zeros():
    img = RasterImage(np.ones((10, 10, 1)))
    patches = partition(img, PatchSpec(8, ZERO_PAD))
    assert len(patches) == 4
    assert patches[3][:2, :2].min() == 1.0 and patches[3][2:, 2:].max() == 0.0


def test_drop_partial_too_small_is_an_error():
    with pytest.raises(EmptyInputError):
        partition(blank(100, 500), PatchSpec(448))


def test_partition_count_formula_randomized():
    rng = np.random.default_rng(3)
    for _ in range(20):
        w, h, s = int(rng.integers(8, 200)), int(rng.integers(8, 200)), int(rng.integers(8, 64))
        img = blank(w, h)
        if w >= s and h >= s:
            assert len(partition(img, PatchSpec(s))) == (w // s) * (h // s)
        assert len(partition(img, PatchSpec(s, ZERO_PAD))) == math.ceil(w / s) * math.ceil(h / s)


def test_featurize_all_zero():
    f = featurize(np.zeros((8, 8, 1)))
    np.testing.assert_array_equal(f[:8], [1, 0, 0, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(f[8:], [0, 0, 0, 0])


def test_featurize_all_one():
    f = featurize(np.ones((8, 8, 1)))
    np.testing.assert_array_equal(f[:8], [0, 0, 0, 0, 0, 0, 0, 1])
    np.testing.assert_array_equal(f[8:], [1, 0, 1, 0])


def test_featurize_checkerboard():
    board = (np.indices((8, 8)).sum(axis=0) % 2).astype(float)
    f = featurize(board)
    assert f[8] == 0.5
    assert f[10] == 0.5


def test_featurize_shape_and_histogram_sums():
    rng = np.random.default_rng(1)
    patch = rng.random((16, 16, 3))
    f = featurize(patch, bins=5)
    assert f.shape == (feature_dim(3, 5),)
    for c in range(3):
        assert abs(f[c * 5:(c + 1) * 5].sum() - 1) < 1e-9
    assert np.all(np.isfinite(f))


def test_featurize_deterministic_on_identical_blocks():
    rng = np.random.default_rng(2)
    block = rng.random((8, 8, 1))
    px = np.concatenate([block, block], axis=1)
    a, b = partition(RasterImage(px), PatchSpec(8))
    assert featurize(a).tobytes() == featurize(b).tobytes()


@pytest.mark.parametrize("channels", [1, 3])
def test_pnm_roundtrip(tmp_path, channels):
    rng = np.random.default_rng(4)
    px = rng.integers(0, 256, size=(5, 7, channels)) / 255.0
    path = tmp_path / "img.pnm"
    write_pnm(RasterImage(px), path)
    back = read_pnm(path)
    np.testing.assert_allclose(back.pixels, px)
    assert path.read_bytes()[:2] == (b"P5" if channels == 1 else b"P6")


def test_pnm_header_with_comment(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
    np.testing.assert_allclose(read_pnm(path).pixels[:, :, 0], [[0.0, 1.0]])


def test_pnm_rejects_bad_input(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P2\n2 1\n255\n0 255\n")
    with pytest.raises(ParseError):
        read_pnm(path)
    path.write_bytes(b"P5\n2 2\n255\n\x00")
    with pytest.raises(ParseError):
        read_pnm(path)


def test_image_to_bag():
    img = RasterImage(np.random.default_rng(5).random((32, 48, 1)))
    bag = image_to_bag(img, [0, 1, 0], "img0", PatchSpec(16))
    assert len(bag) == 6
    assert bag.instances[0].features.shape == (feature_dim(1),)
