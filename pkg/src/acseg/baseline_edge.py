"""Classical edge detectors used as comparison baselines.

All operate on [0, 1] grayscale arrays with mirror boundary handling and
return ``uint8`` masks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image_core import as_image

# separable smoothing across the difference direction
_SMOOTH = {"prewitt": np.array([1.0, 1.0, 1.0]), "sobel": np.array([1.0, 2.0, 1.0])}
OPERATORS = ("roberts", "prewitt", "sobel", "log", "canny")


@dataclass(frozen=True)
class BaselineSpec:
    operator: str = "sobel"
    threshold: float = 0.5
    low: float = 0.1
    high: float = 0.3
    varsigma: float = 1.0
    zero_tol: float = 1e-3

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        if self.operator == "canny" and not 0 <= self.low <= self.high:
            raise ValueError("canny needs 0 <= low <= high")
        if self.operator in ("log", "canny") and self.varsigma <= 0:
            raise ValueError("varsigma must be positive")
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")


def gradient_response(img, operator: str):
    """Directional responses (gx, gy) of a 2x2 or 3x3 difference stencil.

    Differences are taken before smoothing so constant regions give exact zeros.
    """
    arr = as_image(img)
    if operator == "roberts":
        P = np.pad(arr, ((1, 0), (1, 0)), mode="symmetric")
        return P[:-1, :-1] - P[1:, 1:], P[:-1, 1:] - P[1:, :-1]
    if operator not in _SMOOTH:
        raise ValueError(f"no gradient stencil for {operator!r}")
    P = np.pad(arr, 1, mode="symmetric")
    dx = P[:, 2:] - P[:, :-2]
    dy = P[2:, :] - P[:-2, :]
    w = _SMOOTH[operator]
    gx = w[0] * dx[:-2] + w[1] * dx[1:-1] + w[2] * dx[2:]
    gy = w[0] * dy[:, :-2] + w[1] * dy[:, 1:-1] + w[2] * dy[:, 2:]
    return gx, gy


def gradient_detect(img, spec: BaselineSpec) -> np.ndarray:
    if spec.threshold < 0:
        raise ValueError("threshold must be non-negative")
    gx, gy = gradient_response(img, spec.operator)
    return (np.hypot(gx, gy) >= spec.threshold).astype(np.uint8)


def log_kernel(varsigma: float) -> np.ndarray:
    """Sampled Laplacian-of-Gaussian truncated at radius ceil(4 * varsigma)."""
    if varsigma <= 0:
        raise ValueError("varsigma must be positive")
    r = math.ceil(4 * varsigma)
    y, x = np.mgrid[-r:r + 1, -r:r + 1].astype(np.float64)
    q = (x * x + y * y) / (2 * varsigma ** 2)
    return -(1.0 / (math.pi * varsigma ** 4)) * (1.0 - q) * np.exp(-q)


def log_detect(img, varsigma: float, zero_tol: float) -> np.ndarray:
    resp = ndimage.correlate(as_image(img), log_kernel(varsigma), mode="reflect")
    mask = np.zeros(resp.shape, dtype=bool)
    for axis in (0, 1):
        a = resp[:-1, :] if axis == 0 else resp[:, :-1]
        b = resp[1:, :] if axis == 0 else resp[:, 1:]
        cross = (a * b < 0) & (np.abs(a - b) >= zero_tol)
        # mark the side closer to the zero
        first = cross & (np.abs(a) <= np.abs(b))
        second = cross & ~first
        if axis == 0:
            mask[:-1, :] |= first
            mask[1:, :] |= second
        else:
            mask[:, :-1] |= first
            mask[:, 1:] |= second
    return mask.astype(np.uint8)


def _non_max_suppression(mag, gx, gy):
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(mag.shape, dtype=np.int8)   # 0 deg: horizontal gradient
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3
    p = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    shifts = {0: ((0, 1), (0, -1)), 1: ((1, 1), (-1, -1)),
              2: ((1, 0), (-1, 0)), 3: ((1, -1), (-1, 1))}
    keep = np.zeros(mag.shape, dtype=bool)
    for s, ((a0, a1), (b0, b1)) in shifts.items():
        fwd = p[1 + a0:1 + a0 + h, 1 + a1:1 + a1 + w]
        bwd = p[1 + b0:1 + b0 + h, 1 + b1:1 + b1 + w]
        # ties broken one-sided so a flat two-pixel ridge keeps exactly one pixel
        keep |= (sector == s) & (mag >= fwd) & (mag > bwd)
    return np.where(keep, mag, 0.0)


def hysteresis(strength, low: float, high: float) -> np.ndarray:
    """Pixels >= high plus pixels >= low 8-connected to them."""
    if not 0 <= low <= high:
        raise ValueError("need 0 <= low <= high")
    candidate = strength >= low
    labels, n = ndimage.label(candidate, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return np.zeros(strength.shape, dtype=np.uint8)
    strong = np.zeros(n + 1, dtype=bool)
    strong[np.unique(labels[(strength >= high) & candidate])] = True
    strong[0] = False
    return strong[labels].astype(np.uint8)


def canny_detect(img, low: float, high: float, varsigma: float) -> np.ndarray:
    if not 0 <= low <= high:
        raise ValueError("need 0 <= low <= high")
    if varsigma <= 0:
        raise ValueError("varsigma must be positive")
    smooth = ndimage.gaussian_filter(as_image(img), varsigma, mode="reflect")
    gx, gy = gradient_response(smooth, "sobel")
    mag = np.hypot(gx, gy)
    thin = _non_max_suppression(mag, gx, gy)
    # a zero response is never an edge, even with low = 0
    thin[mag == 0] = -1.0
    return hysteresis(thin, low, high)


def detect(img, spec: BaselineSpec) -> np.ndarray:
    if spec.operator == "log":
        return log_detect(img, spec.varsigma, spec.zero_tol)
    if spec.operator == "canny":
        return canny_detect(img, spec.low, spec.high, spec.varsigma)
    return gradient_detect(img, spec)
