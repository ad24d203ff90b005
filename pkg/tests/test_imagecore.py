import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image as PILImage

from ppcorf.imagecore import (
    ImageFormatError,
    as_image,
    convolve,
    load_grayscale,
    rescale,
    save_map,
    to_uint8,
)


def brute_correlate(img, k):
    h, w = img.shape
    r = k.shape[0] // 2

    def m(i, n):
        while i < 0 or i >= n:
            i = -i if i < 0 else 2 * (n - 1) - i
        return i

    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            out[y, x] = sum(
                img[m(y + v, h), m(x + u, w)] * k[r + v, r + u]
                for v in range(-r, r + 1)
                for u in range(-r, r + 1)
            )
    return out


def test_pgm_bytes_scale_to_unit_range(tmp_path):
    p = tmp_path / "tiny.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    img = load_grayscale(p)
    np.testing.assert_array_equal(img, [[0.0, 1.0], [128 / 255, 64 / 255]])


def test_all_zero_png(tmp_path):
    p = tmp_path / "zero.png"
    PILImage.fromarray(np.zeros((5, 7), np.uint8)).save(p)
    img = load_grayscale(p)
    assert img.shape == (5, 7) and not img.any()


def test_rgb_uses_fixed_luma(tmp_path):
    p = tmp_path / "rgb.png"
    px = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]], np.uint8)
    PILImage.fromarray(px).save(p)
    np.testing.assert_allclose(load_grayscale(p)[0], [0.299, 0.587, 0.114], atol=1e-12)


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_save_load_round_trip(tmp_path, rng, suffix):
    img = rng.random((16, 16))
    p = tmp_path / f"rt{suffix}"
    save_map(img, p)
    assert np.abs(load_grayscale(p) - img).max() <= 1 / 255


def test_to_uint8_rounds_half_up_and_clamps():
    np.testing.assert_array_equal(to_uint8([-1.0, 0.5 / 255, 1.5 / 255, 2.0]), [0, 1, 2, 255])


def test_rescale_reports_peak():
    scaled, peak = rescale(np.array([[0.0, 2.0], [1.0, 0.5]]))
    assert peak == 2.0 and scaled.max() == 1.0
    zeros, zpeak = rescale(np.zeros((2, 2)))
    assert zpeak == 0.0 and not zeros.any()


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_grayscale(tmp_path / "nope.png")


def test_unsupported_bit_depth(tmp_path):
    p = tmp_path / "deep.png"
    PILImage.fromarray(np.zeros((4, 4), np.uint16) + 1000).save(p)
    with pytest.raises(ImageFormatError):
        load_grayscale(p)


def test_unsupported_format(tmp_path):
    p = tmp_path / "x.bmp"
    PILImage.fromarray(np.zeros((4, 4), np.uint8)).save(p)
    with pytest.raises(ImageFormatError):
        load_grayscale(p)
    q = tmp_path / "garbage.png"
    q.write_bytes(b"not an image")
    with pytest.raises(ImageFormatError):
        load_grayscale(q)


def test_as_image_rejects_out_of_range():
    with pytest.raises(ValueError):
        as_image([[0.0, 1.5]])
    with pytest.raises(ValueError):
        as_image([[np.nan]])
    with pytest.raises(ValueError):
        as_image(np.zeros(3))


def test_identity_kernel(rng):
    img = rng.random((6, 9))
    np.testing.assert_array_equal(convolve(img, [[1.0]]), img)
    k3 = np.zeros((3, 3))
    k3[1, 1] = 1.0
    np.testing.assert_array_equal(convolve(img, k3), img)


def test_delta_reproduces_taps(rng):
    k = rng.normal(size=(5, 5))
    img = np.zeros((11, 11))
    img[5, 5] = 1.0
    out = convolve(img, k)
    # correlation flips the kernel about its centre
    np.testing.assert_allclose(out[3:8, 3:8], k[::-1, ::-1], atol=1e-15)
    assert np.count_nonzero(out) == np.count_nonzero(k)


def test_matches_brute_force(rng):
    img = rng.random((9, 9))
    k = rng.normal(size=(5, 5))
    np.testing.assert_allclose(convolve(img, k), brute_correlate(img, k), atol=1e-9, rtol=0)


def test_wide_kernel_on_narrow_image(rng):
    img = rng.random((3, 8))
    k = rng.normal(size=(7, 7))
    np.testing.assert_allclose(convolve(img, k), brute_correlate(img, k), atol=1e-9, rtol=0)


def test_oversized_kernel_rejected():
    with pytest.raises(ValueError, match="too large"):
        convolve(np.zeros((2, 5)), np.ones((7, 7)))


def test_even_kernel_rejected():
    with pytest.raises(ValueError):
        convolve(np.zeros((5, 5)), np.ones((2, 2)))


small = arrays(np.float64, (7, 6), elements=st.floats(0, 1))
kern = arrays(np.float64, (3, 3), elements=st.floats(-2, 2))


@settings(max_examples=40, deadline=None)
@given(small, small, kern, st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(i1, i2, k, a, b):
    lhs = convolve(a * i1 + b * i2, k)
    rhs = a * convolve(i1, k) + b * convolve(i2, k)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9, rtol=0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), kern)
def test_constant_under_zero_sum_kernel(c, k):
    k = k - k.mean()
    out = convolve(np.full((8, 8), c), k)
    assert np.abs(out).max() <= 1e-9


def test_deterministic(rng):
    img = rng.random((20, 20))
    k = rng.normal(size=(5, 5))
    assert convolve(img, k).tobytes() == convolve(img.copy(), k.copy()).tobytes()
