import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from acseg.baseline_edge import (BaselineSpec, canny_detect, gradient_detect, gradient_response,
                                 hysteresis, log_detect, log_kernel)

GRADIENT_OPS = ["roberts", "prewitt", "sobel"]


def step_image(h=16, w=16, col=8):
    img = np.zeros((h, w))
    img[:, col:] = 1.0
    return img


def speckled_step(seed=5):
    img = step_image(48, 48, 24) * 0.8 + 0.1
    rng = np.random.default_rng(seed)
    idx = rng.integers(2, 46, size=(30, 2))
    img[idx[:, 0], idx[:, 1]] = rng.random(30)
    return img


@pytest.mark.parametrize("op", GRADIENT_OPS)
@pytest.mark.parametrize("value", [0.0, 0.37, 1.0])
def test_constant_image_zero_response(op, value):
    gx, gy = gradient_response(np.full((7, 9), value), op)
    assert np.all(gx == 0) and np.all(gy == 0)
    assert not gradient_detect(np.full((7, 9), value), BaselineSpec(op, threshold=1e-9)).any()


def test_sobel_step_response():
    gx, gy = gradient_response(step_image(), "sobel")
    assert np.all(gx[:, 7] == 4) and np.all(gx[:, 8] == 4)
    assert np.all(gx[:, :7] == 0) and np.all(gx[:, 9:] == 0)
    assert np.all(gy == 0)
    mask = gradient_detect(step_image(), BaselineSpec("sobel", threshold=4.0))
    assert mask[:, 7:9].all() and mask.sum() == 32


def test_threshold_zero_marks_everything():
    img = np.random.default_rng(0).random((6, 6))
    for op in GRADIENT_OPS:
        assert gradient_detect(img, BaselineSpec(op, threshold=0.0)).all()


def test_roberts_stencil_size():
    gx, _ = gradient_response(step_image(), "roberts")
    assert np.count_nonzero(gx[3]) == 1


@pytest.mark.parametrize("bad", [dict(operator="bogus"), dict(operator="canny", low=0.5, high=0.2),
                                 dict(operator="log", varsigma=0), dict(threshold=-1)])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        BaselineSpec(**bad)


@pytest.mark.parametrize("vs", [0.5, 1.0, 2.3])
def test_log_kernel_values(vs):
    k = log_kernel(vs)
    r = math.ceil(4 * vs)
    assert k.shape == (2 * r + 1, 2 * r + 1)
    assert k[r, r] == pytest.approx(-1 / (math.pi * vs ** 4), rel=1e-15)
    assert np.array_equal(k, k.T) and np.array_equal(k, k[::-1])


def test_log_constant_and_step():
    assert not log_detect(np.full((20, 20), 0.6), 1.0, 1e-6).any()
    mask = log_detect(step_image(20, 20, 10), 1.0, 1e-3)
    assert mask[:, 9:11].any(axis=1).all()
    assert not mask[:, :6].any() and not mask[:, 14:].any()


def test_log_bigger_varsigma_fewer_components():
    img = speckled_step()
    eight = np.ones((3, 3), dtype=int)
    counts = [ndimage.label(log_detect(img, vs, 1e-3), structure=eight)[1] for vs in (1.0, 2.0, 3.0)]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_canny_constant_and_thin_step():
    assert not canny_detect(np.full((16, 16), 0.4), 0.0, 0.0, 1.0).any()
    mask = canny_detect(step_image(), 0.1, 0.3, 1.0)
    assert np.all(mask.sum(axis=1) == 1)
    assert np.all(mask[:, 7] == 1)


def test_canny_low_equals_high_is_single_threshold():
    img = speckled_step()
    mask = canny_detect(img, 0.5, 0.5, 1.0)
    again = hysteresis(np.where(mask, 1.0, 0.0), 0.5, 0.5)
    assert np.array_equal(mask, again)
    smooth = ndimage.gaussian_filter(img, 1.0, mode="reflect")
    gx, gy = gradient_response(smooth, "sobel")
    assert np.all(np.hypot(gx, gy)[mask.astype(bool)] >= 0.5)


def test_hysteresis_connectivity():
    s = np.zeros((5, 7))
    s[2, 1], s[3, 2], s[2, 5] = 1.0, 0.4, 0.4   # diagonal neighbour kept, isolated weak dropped
    out = hysteresis(s, 0.3, 0.9)
    assert out[2, 1] == 1 and out[3, 2] == 1 and out[2, 5] == 0
    with pytest.raises(ValueError):
        hysteresis(s, 0.5, 0.4)


imgs = arrays(np.float64, st.tuples(st.integers(10, 20), st.integers(10, 20)),
              elements=st.floats(0, 1))


@given(imgs, st.floats(0, 2), st.floats(0, 2), st.floats(0, 2))
def test_canny_monotone_in_high(img, low, h1, h2):
    h1, h2 = sorted((h1, h2))
    low = min(low, h1)
    a = canny_detect(img, low, h1, 1.0)
    b = canny_detect(img, low, h2, 1.0)
    assert np.all(b <= a)


def _interior_shift_equal(detector, img, margin):
    shifted = np.roll(img, 1, axis=0)
    a, b = detector(img), detector(shifted)
    sl = (slice(margin + 1, -margin), slice(margin, -margin))
    prev = (slice(margin, -margin - 1), slice(margin, -margin))
    return np.array_equal(b[sl], a[prev])


@given(arrays(np.float64, (24, 24), elements=st.floats(0, 1)))
def test_translation_equivariance(img):
    for op in GRADIENT_OPS:
        assert _interior_shift_equal(lambda x: gradient_detect(x, BaselineSpec(op, threshold=0.5)),
                                     img, 3)
    assert _interior_shift_equal(lambda x: log_detect(x, 0.8, 1e-3), img, 6)
    assert _interior_shift_equal(lambda x: canny_detect(x, 0.2, 0.6, 0.8), img, 8)
