import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from acseg.image_core import (ImageFormatError, ShapeSpec, add_gaussian_noise,
                              gaussian_noise_field, load_image, load_mask, normalize,
                              pad_neumann, profile_i1, save_image, save_mask, synth_two_phase)

unit = st.floats(0.0, 1.0, allow_nan=False)
small_images = arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=unit)


def _write_gray(path, values):
    Image.fromarray(np.asarray(values, dtype=np.uint8), mode="L").save(path)


@pytest.mark.parametrize("value, expected", [(255, 1.0), (0, 0.0), (128, 128 / 255)])
def test_load_maps_8bit_range(tmp_path, value, expected):
    p = tmp_path / "px.pgm"
    _write_gray(p, [[value]])
    assert load_image(p)[0, 0] == pytest.approx(expected, abs=1e-15)


def test_load_png_rgb_selects_channel(tmp_path):
    rgb = np.zeros((3, 4, 3), dtype=np.uint8)
    rgb[..., 0], rgb[..., 1], rgb[..., 2] = 10, 200, 255
    p = tmp_path / "c.png"
    Image.fromarray(rgb, mode="RGB").save(p)
    assert np.all(load_image(p) == 10 / 255)
    assert np.all(load_image(p, channel=1) == 200 / 255)
    with pytest.raises(ValueError):
        load_image(p, channel=3)


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "nope.pgm")
    bogus = tmp_path / "bogus.pgm"
    bogus.write_bytes(b"this is not an image")
    with pytest.raises(ImageFormatError):
        load_image(bogus)
    deep = tmp_path / "deep.png"
    Image.fromarray(np.zeros((2, 2), dtype=np.uint16)).save(deep)
    with pytest.raises(ImageFormatError):
        load_image(deep)


def test_constant_roundtrip(tmp_path):
    p = tmp_path / "half.pgm"
    save_image(np.full((5, 7), 0.5), p)
    assert np.max(np.abs(load_image(p) - 0.5)) <= 1 / 255


@pytest.mark.parametrize("suffix", [".pgm", ".png"])
def test_random_roundtrip_within_half_step(tmp_path, rng, suffix):
    img = rng.random((23, 17))
    p = tmp_path / f"r{suffix}"
    save_image(img, p)
    assert np.max(np.abs(load_image(p) - img)) <= 0.5 / 255 + 1e-12


def test_pgm_is_binary_p5(tmp_path):
    p = tmp_path / "x.pgm"
    save_image(np.zeros((2, 2)), p)
    assert p.read_bytes()[:2] == b"P5"


def test_save_errors_and_clamp(tmp_path, caplog):
    with pytest.raises(OSError):
        save_image(np.zeros((2, 2)), "")
    with pytest.raises(ImageFormatError):
        save_image(np.zeros((2, 2)), tmp_path / "x.bmp")
    with pytest.raises(OSError):
        save_image(np.zeros((2, 2)), tmp_path / "missing_dir" / "x.pgm")
    p = tmp_path / "clamp.png"
    save_image(np.array([[-0.5, 1.5]]), p)
    assert "clamping" in caplog.text
    assert load_image(p).tolist() == [[0.0, 1.0]]


def test_mask_roundtrip(tmp_path):
    m = np.array([[0, 1], [1, 0]], dtype=np.uint8)
    p = tmp_path / "m.pgm"
    save_mask(m, p)
    assert set(np.unique(np.asarray(Image.open(p)))) == {0, 255}
    assert np.array_equal(load_mask(p), m)


@given(small_images)
def test_roundtrip_property(tmp_path_factory, img):
    p = tmp_path_factory.mktemp("rt") / "img.png"
    save_image(img, p)
    assert np.max(np.abs(load_image(p) - img)) <= 0.5 / 255 + 1e-12


def test_pad_examples():
    row = np.array([[1.0, 2.0, 3.0]])
    padded = pad_neumann(np.vstack([row, row]), 1).data
    assert padded[1].tolist() == [1.0, 1.0, 2.0, 3.0, 3.0]
    zero = pad_neumann(np.vstack([row, row]), 0)
    assert zero.halo == 0 and np.array_equal(zero.core, np.vstack([row, row]))
    with pytest.raises(ValueError):
        pad_neumann(np.zeros((3, 5)), 4)
    with pytest.raises(ValueError):
        pad_neumann(np.zeros((3, 5)), -1)


@given(st.floats(0, 1), st.integers(2, 8), st.integers(2, 8), st.integers(0, 2))
def test_pad_constant_stays_constant(c, h, w, width):
    out = pad_neumann(np.full((h, w), c), width)
    assert np.all(out.data == c)
    assert out.data.shape == (h + 2 * width, w + 2 * width)


@given(small_images.filter(lambda a: min(a.shape) >= 2))
def test_pad_zero_normal_difference(img):
    d = pad_neumann(img, 1).data
    assert np.array_equal(d[0, 1:-1], img[0]) and np.array_equal(d[-1, 1:-1], img[-1])
    assert np.array_equal(d[1:-1, 0], img[:, 0]) and np.array_equal(d[1:-1, -1], img[:, -1])
    assert np.array_equal(pad_neumann(img, 1).core, img)


def test_noise_determinism_and_degenerate():
    img = np.full((16, 16), 0.5)
    a = add_gaussian_noise(img, 0, 0.2, 3)
    assert np.array_equal(a, add_gaussian_noise(img, 0, 0.2, 3))
    assert not np.array_equal(a, add_gaussian_noise(img, 0, 0.2, 4))
    assert np.array_equal(add_gaussian_noise(img, 0, 0, 3), img)
    assert a.min() >= 0 and a.max() <= 1
    with pytest.raises(ValueError):
        add_gaussian_noise(img, 0, -0.1, 3)


def test_noise_std_before_clamp():
    clean, _ = synth_two_phase(400, 400, ShapeSpec.rectangle(0, 0, 400, 200))
    raw = gaussian_noise_field(clean.shape, 0.0, 0.2, 11)
    assert raw.size >= 1e5
    assert abs(np.std(raw) - 0.2) <= 0.05 * 0.2
    noisy = add_gaussian_noise(clean, 0.0, 0.2, 11)
    interior = (clean + raw > 0) & (clean + raw < 1)
    assert np.allclose(noisy[interior] - clean[interior], raw[interior])


def test_synth_examples():
    img, mask = synth_two_phase(20, 10, ShapeSpec.disk(0))
    assert not img.any() and not mask.any()
    img, mask = synth_two_phase(20, 10, ShapeSpec.rectangle(0, 0, 10, 20))
    assert img.all() and mask.all()
    with pytest.raises(ValueError):
        synth_two_phase(20, 20, ShapeSpec.disk(11))
    with pytest.raises(ValueError):
        synth_two_phase(20, 20, ShapeSpec.rectangle(0, 0, 21, 5))


@given(st.floats(1.0, 30.0))
def test_disk_area_within_perimeter(r):
    n = 64
    img, mask = synth_two_phase(n, n, ShapeSpec.disk(r))
    assert abs(int(mask.sum()) - math.pi * r * r) <= 2 * math.pi * r
    assert np.array_equal(img, mask.astype(np.float64))


def test_multi_blob_is_union():
    spec = ShapeSpec.multi_blob([(10, 10, 5), (20, 25, 4)])
    img, mask = synth_two_phase(32, 32, spec)
    _, a = synth_two_phase(32, 32, ShapeSpec.disk(5, (10, 10)))
    _, b = synth_two_phase(32, 32, ShapeSpec.disk(4, (20, 25)))
    assert np.array_equal(mask, a | b)


def test_profile_i1():
    prof = profile_i1()
    assert prof.shape == (32, 24)
    assert prof[0, 0] == 0.5 and prof[0, 7] == 0.7
    assert (prof == prof[0]).all()
    assert profile_i1(3).shape == (3, 24)


@given(small_images)
def test_normalize_range(img):
    out = normalize(img * 5 - 2)
    assert out.min() >= 0 and out.max() <= 1
