"""Grayscale rasters: file I/O, Neumann padding, synthetic images and noise.

Images are plain ``float64`` numpy arrays of shape ``(height, width)`` with
intensities in [0, 1]. Masks are ``uint8`` arrays with values in {0, 1}.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

log = logging.getLogger(__name__)

# 24-entry test profile: weak edge, noise point, jump edge, stair edge (tenths)
_PROFILE_I1 = (5, 5, 4.5, 4.5,
               0, 0, 0, 7, 0, 0, 0, 0,
               2, 5, 2, 2,
               0, 0, 0, 0, 7, 7, 7, 7)


class ImageFormatError(ValueError):
    """Raised when a file is not a supported raster format."""


@dataclass(frozen=True)
class PaddedImage:
    """Image extended by a mirror-reflected halo of ``halo`` pixels."""

    data: np.ndarray
    halo: int

    @property
    def core(self) -> np.ndarray:
        h = self.halo
        if h == 0:
            return self.data
        return self.data[h:-h, h:-h]


def as_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2D image, got shape {arr.shape}")
    return arr


def normalize(img) -> np.ndarray:
    """Affinely map ``img`` onto [0, 1] (constant images map to 0)."""
    arr = as_image(img)
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def load_image(path, channel: int | None = None) -> np.ndarray:
    """Read a PGM/PNG file into a [0, 1] float image.

    Multi-channel files are reduced to a single channel (default 0); no
    luminance mixing is done.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            bands = im.getbands()
            if mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise ImageFormatError(f"{path}: unsupported pixel mode {mode!r}")
            if mode == "P":
                im = im.convert("RGB")
                bands = im.getbands()
            arr = np.asarray(im)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a readable raster image") from exc

    if arr.ndim == 3:
        nchan = arr.shape[2]
        ch = 0 if channel is None else channel
        if not 0 <= ch < nchan:
            raise ValueError(f"channel {ch} out of range for {nchan}-channel image {bands}")
        arr = arr[:, :, ch]
    elif channel not in (None, 0):
        raise ValueError(f"channel {channel} out of range for single-channel image")

    if arr.dtype == np.bool_:
        return arr.astype(np.float64)
    return arr.astype(np.float64) / 255.0


def save_image(img, path) -> None:
    """Write an 8-bit grayscale file; format follows the suffix (.pgm or .png).

    Values outside [0, 1] are clamped (logged as a warning).
    """
    if not str(path):
        raise OSError("empty output path")
    arr = as_image(img)
    if arr.min() < 0.0 or arr.max() > 1.0:
        log.warning("save_image: clamping values outside [0, 1] (range %.4g..%.4g)",
                    arr.min(), arr.max())
        arr = np.clip(arr, 0.0, 1.0)
    path = Path(path)
    fmt = {".pgm": "PPM", ".png": "PNG"}.get(path.suffix.lower())
    if fmt is None:
        raise ImageFormatError(f"{path}: output must be .pgm or .png")
    quantized = np.rint(arr * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="L").save(path, format=fmt)


def save_mask(mask, path) -> None:
    """Write a binary mask with values {0, 255}."""
    save_image(np.asarray(mask, dtype=np.float64) > 0, path)


def load_mask(path) -> np.ndarray:
    return (load_image(path) >= 0.5).astype(np.uint8)


def pad_neumann(img, width: int) -> PaddedImage:
    """Extend ``img`` by ``width`` pixels using mirror reflection.

    The reflection axis is the outer edge of the boundary pixel, so the
    first normal difference across the boundary is zero: ``[a, b, c]`` with
    width 1 becomes ``[a, a, b, c, c]``.
    """
    arr = as_image(img)
    if width < 0:
        raise ValueError("pad width must be non-negative")
    if width > min(arr.shape):
        raise ValueError(f"pad width {width} exceeds image size {arr.shape}")
    if width == 0:
        return PaddedImage(arr.copy(), 0)
    return PaddedImage(np.pad(arr, width, mode="symmetric"), width)


def gaussian_noise_field(shape, mean: float, std: float, seed: int) -> np.ndarray:
    """The raw (unclamped) noise sample used by :func:`add_gaussian_noise`."""
    if std < 0:
        raise ValueError("noise std must be non-negative")
    rng = np.random.default_rng(seed)
    return rng.normal(mean, std, size=shape) if std > 0 else np.full(shape, float(mean))


def add_gaussian_noise(img, mean: float, std: float, seed: int) -> np.ndarray:
    arr = as_image(img)
    if std < 0:
        raise ValueError("noise std must be non-negative")
    if std == 0 and mean == 0:
        return arr.copy()
    noisy = arr + gaussian_noise_field(arr.shape, mean, std, seed)
    return np.clip(noisy, 0.0, 1.0)


@dataclass(frozen=True)
class ShapeSpec:
    """Foreground geometry for :func:`synth_two_phase`.

    Coordinates are in pixels with pixel ``(i, j)`` centred at
    ``(i + 0.5, j + 0.5)``. A ``None`` centre means the canvas centre.
    """

    kind: str = "disk"
    radius: float = 0.0
    center: tuple[float, float] | None = None
    box: tuple[int, int, int, int] | None = None  # top, left, bottom, right (exclusive)
    blobs: tuple[tuple[float, float, float], ...] = field(default_factory=tuple)

    @classmethod
    def disk(cls, radius, center=None):
        return cls("disk", radius=float(radius), center=center)

    @classmethod
    def rectangle(cls, top, left, bottom, right):
        return cls("rectangle", box=(int(top), int(left), int(bottom), int(right)))

    @classmethod
    def multi_blob(cls, blobs):
        return cls("multi-blob", blobs=tuple((float(a), float(b), float(c)) for a, b, c in blobs))


def _disk_mask(height, width, cy, cx, r):
    if r < 0:
        raise ValueError("disk radius must be non-negative")
    if cy - r < 0 or cx - r < 0 or cy + r > height or cx + r > width:
        raise ValueError(f"disk (center=({cy}, {cx}), r={r}) exceeds {height}x{width} canvas")
    yy = np.arange(height)[:, None] + 0.5
    xx = np.arange(width)[None, :] + 0.5
    return (yy - cy) ** 2 + (xx - cx) ** 2 < r * r


def synth_two_phase(width: int, height: int, shape: ShapeSpec):
    """Binary two-phase image and its exact foreground mask.

    Returns ``(image, mask)``; ``image`` is float {0, 1}, ``mask`` uint8.
    """
    if width < 1 or height < 1:
        raise ValueError("canvas must be at least 1x1")
    if shape.kind == "disk":
        cy, cx = shape.center if shape.center is not None else (height / 2, width / 2)
        fg = _disk_mask(height, width, cy, cx, shape.radius)
    elif shape.kind == "rectangle":
        if shape.box is None:
            raise ValueError("rectangle shape needs a box")
        top, left, bottom, right = shape.box
        if not (0 <= top <= bottom <= height and 0 <= left <= right <= width):
            raise ValueError(f"rectangle {shape.box} exceeds {height}x{width} canvas")
        fg = np.zeros((height, width), dtype=bool)
        fg[top:bottom, left:right] = True
    elif shape.kind == "multi-blob":
        fg = np.zeros((height, width), dtype=bool)
        for cy, cx, r in shape.blobs:
            fg |= _disk_mask(height, width, cy, cx, r)
    else:
        raise ValueError(f"unknown shape kind {shape.kind!r}")
    mask = fg.astype(np.uint8)
    return mask.astype(np.float64), mask


def profile_i1(height: int = 32) -> np.ndarray:
    """The 24-sample edge test profile replicated over ``height`` rows."""
    if height < 1:
        raise ValueError("height must be positive")
    row = np.array(_PROFILE_I1, dtype=np.float64) / 10.0
    return np.tile(row, (height, 1))


def default_threads() -> int:
    """Thread count from ``ACSEG_THREADS`` (falls back to 1)."""
    try:
        return max(1, int(os.environ.get("ACSEG_THREADS", "1")))
    except ValueError:
        return 1

