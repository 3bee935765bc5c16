import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from expofuse.imagecore import (YCbCr, downsample, gaussian_kernel, gaussian_weight, histogram, luma,
                                rgb_to_ycbcr, sobel_magnitude, ycbcr_to_rgb)

unit = st.floats(0.0, 1.0, allow_nan=False)


@pytest.mark.parametrize("rgb, expect", [
    ((1, 1, 1), (1.0, 0.5, 0.5)),
    ((0, 0, 0), (0.0, 0.5, 0.5)),
])
def test_achromatic_fixed_points(rgb, expect):
    ycc = rgb_to_ycbcr(np.array(rgb, float).reshape(1, 1, 3))
    assert (ycc.y[0, 0], ycc.cb[0, 0], ycc.cr[0, 0]) == pytest.approx(expect, abs=1e-15)


def test_red_luma_and_inverse():
    red = np.array([1.0, 0, 0]).reshape(1, 1, 3)
    ycc = rgb_to_ycbcr(red)
    assert ycc.y[0, 0] == pytest.approx(0.299, abs=1e-15)
    np.testing.assert_allclose(ycbcr_to_rgb(ycc), red, atol=1e-6)
    white = ycbcr_to_rgb(YCbCr(np.ones((1, 1)), np.full((1, 1), 0.5), np.full((1, 1), 0.5)))
    np.testing.assert_allclose(white, 1.0, atol=1e-12)


@settings(max_examples=200)
@given(arrays(np.float64, (4, 5, 3), elements=unit))
def test_color_round_trip(rgb):
    np.testing.assert_allclose(ycbcr_to_rgb(rgb_to_ycbcr(rgb)), rgb, atol=1e-6)


def test_out_of_gamut_clamps():
    out = ycbcr_to_rgb(YCbCr(np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2))))
    assert out.min() >= 0 and out.max() <= 1


def test_luma_of_gray_plane_is_identity(rng):
    p = rng.random((6, 7))
    np.testing.assert_array_equal(luma(p), p)


def test_sobel_constant_is_exactly_zero():
    assert not sobel_magnitude(np.full((5, 6), 0.37)).any()


def test_sobel_ramp_interior_columns_equal():
    ramp = np.tile(np.linspace(0, 1, 5), (5, 1))
    got = sobel_magnitude(ramp)
    np.testing.assert_allclose(got, oracles.sobel_mag(ramp), atol=1e-15)
    # interior columns: gx = 4 * 2 * step with step 0.25
    np.testing.assert_allclose(got[:, 1:4], 2.0 / (4 * math.sqrt(2)), atol=1e-15)


def test_sobel_impulse_matches_hand_stencil():
    p = np.zeros((5, 5))
    p[2, 2] = 1.0
    got = sobel_magnitude(p) * 4 * math.sqrt(2)
    hand = np.zeros((5, 5))
    hand[1:4, 1:4] = [[math.sqrt(2), 2, math.sqrt(2)], [2, 0, 2], [math.sqrt(2), 2, math.sqrt(2)]]
    np.testing.assert_allclose(got, hand, atol=1e-14)


def test_sobel_random_matches_oracle_and_bounded(rng):
    for shape in [(1, 1), (1, 4), (7, 9)]:
        p = rng.random(shape)
        got = sobel_magnitude(p)
        np.testing.assert_allclose(got, oracles.sobel_mag(p), atol=1e-14)
        assert got.max() <= 1.0


@settings(max_examples=50)
@given(arrays(np.float64, (6, 8), elements=unit))
def test_sobel_transpose_equivariance(p):
    np.testing.assert_allclose(sobel_magnitude(p.T), sobel_magnitude(p).T, atol=1e-15)


def test_gaussian_weight_examples():
    assert gaussian_weight(0, 0, 3.0) == 1.0
    assert gaussian_weight(3.0, 0, 3.0) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert gaussian_weight(9.0, 0, 3.0) == pytest.approx(0.011108996538242306, abs=1e-15)
    with pytest.raises(ValueError):
        gaussian_weight(0, 0, 0.0)
    with pytest.raises(ValueError):
        gaussian_weight(0, 0, -1.0)


def test_gaussian_kernel_normalized_and_symmetric():
    k = gaussian_kernel(11, 1.5)
    assert k.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(k, k.T, atol=0)
    np.testing.assert_allclose(k, oracles.gauss_window(11, 1.5), atol=1e-16)


def test_downsample_examples(rng):
    p = rng.random((8, 8))
    np.testing.assert_array_equal(downsample(p, 1), p)
    assert downsample(np.array([[0.0, 1.0], [1.0, 0.0]]), 2) == pytest.approx(np.array([[0.5]]))
    np.testing.assert_allclose(downsample(p, 2), oracles.block_means(p, 2), atol=1e-15)
    q = rng.random((7, 5))
    np.testing.assert_allclose(downsample(q, 3), oracles.block_means(q, 3), atol=1e-15)
    with pytest.raises(ValueError):
        downsample(p, 0)


@settings(max_examples=50)
@given(arrays(np.float64, (8, 12), elements=unit), st.sampled_from([1, 2, 4]))
def test_downsample_preserves_mean_when_divisible(p, k):
    assert downsample(p, k).mean() == pytest.approx(p.mean(), abs=1e-12)


def test_histogram_examples(rng):
    c = histogram(np.full((4, 4), 0.5), 256)
    assert c[128] == 16 and c.sum() == 16
    half = np.zeros((2, 4))
    half[:, 2:] = 1.0
    assert histogram(half, 2).tolist() == [4, 4]
    p = rng.random((16, 16))
    assert histogram(p, 256).tolist() == oracles.hist(p, 256)
    with pytest.raises(ValueError):
        histogram(p, 1)


def test_out_of_range_clamps_and_nan_rejected():
    assert sobel_magnitude(np.array([[1.5, -0.2]])).max() == sobel_magnitude(np.array([[1.0, 0.0]])).max()
    with pytest.raises(ValueError):
        sobel_magnitude(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        sobel_magnitude(np.zeros((0, 3)))
