"""Nonlocal Laplacian edge detector.

The operator is the quadrature-based finite-difference discretization of

    L u(x) = 1/2 * int_{|s| <= delta} rho(|s|) (u(x+s) - 2u(x) + u(x-s)) ds

with the fractional power kernel ``rho(r) = 2(4-a) / (pi delta^(4-a) r^a)``.
On the pixel lattice it reduces to a symmetric stencil

    L I[i,j] = sum_{p,q=0..delta} c[p,q] (I[i+p,j+q] + I[i-p,j+q]
                                          + I[i+p,j-q] + I[i-p,j-q] - 4 I[i,j])

whose weights ``c[p,q]`` are integrals of bilinear hat functions against
``rho(r) r^2 / (x+y)`` over the first-quadrant quarter disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import roots_jacobi

from .image_core import as_image, pad_neumann

CACHE_FORMAT_VERSION = 1
DEFAULT_QUAD_LEVEL = 3
COEFF_TOL = 1e-6

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)


class ConvergenceError(RuntimeError):
    """Coefficient quadrature did not settle to the requested tolerance."""


@dataclass(frozen=True)
class KernelSpec:
    delta: int
    alpha: float = 1.0

    def __post_init__(self):
        if int(self.delta) != self.delta or self.delta < 1:
            raise ValueError(f"delta must be a positive integer, got {self.delta}")
        if not 0.0 <= self.alpha < 4.0:
            raise ValueError(f"alpha must lie in [0, 4), got {self.alpha}")
        object.__setattr__(self, "delta", int(self.delta))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def scale(self) -> float:
        """Kernel prefactor 2(4-alpha) / (pi delta^(4-alpha))."""
        return 2.0 * (4.0 - self.alpha) / (math.pi * self.delta ** (4.0 - self.alpha))


@dataclass(frozen=True)
class CoeffTable:
    delta: int
    alpha: float
    quad_level: int
    weights: np.ndarray  # (delta+1, delta+1), weights[p, q]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def kernel_rho(r, spec: KernelSpec):
    """Fractional power kernel; zero outside (0, delta]."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r == 0.0):
        raise ValueError("kernel_rho is singular at r = 0; use a quadrature avoiding the origin")
    inside = (r > 0.0) & (r <= spec.delta)
    with np.errstate(divide="ignore"):
        val = np.where(inside, spec.scale * np.abs(r) ** (-spec.alpha), 0.0)
    return float(val) if val.ndim == 0 else val


# -- quadrature over the quarter disk -----------------------------------------

def _gl(a, b, n_panels):
    """Composite 4-point Gauss-Legendre nodes/weights on [a, b]."""
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return x, w


def _curved_piece(lo, hi, inner_lo, inner_hi_fn, n_panels):
    """Nodes on {lo <= t <= hi, inner_lo <= v <= inner_hi_fn(t)}."""
    t, wt = _gl(lo, hi, n_panels)
    top = inner_hi_fn(t)
    span = np.maximum(top - inner_lo, 0.0)
    s, ws = _gl(0.0, 1.0, n_panels)
    v = inner_lo + span[:, None] * s[None, :]
    w = wt[:, None] * span[:, None] * ws[None, :]
    return np.broadcast_to(t[:, None], v.shape).ravel(), v.ravel(), w.ravel()


def _cut_cell(x0, x1, y0, y1, delta, n_panels):
    """Rule for the part of a square cell inside the disk of radius ``delta``.

    The outer variable is chosen so the arc is a graph with slope at most
    one, and the outer interval is split where the arc meets the cell edges,
    leaving a smooth integrand on every piece.
    """
    d2 = delta * delta
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    swap = cx >= cy
    if swap:  # integrate over y outside, x inside
        x0, x1, y0, y1 = y0, y1, x0, x1
    # outer variable t in [x0, x1], inner v in [y0, min(y1, sqrt(d2 - t^2))]
    breaks = [x0, x1]
    for v_edge in (y0, y1):
        if v_edge * v_edge < d2:
            t_edge = math.sqrt(d2 - v_edge * v_edge)
            if x0 < t_edge < x1:
                breaks.append(t_edge)
    breaks = sorted(set(breaks))
    xs, ys, ws = [], [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        tm = 0.5 * (lo + hi)
        if tm * tm + y0 * y0 >= d2:
            continue
        pieces = _curved_piece(
            lo, hi, y0,
            lambda t: np.minimum(y1, np.sqrt(np.maximum(d2 - t * t, 0.0))),
            n_panels)
        xs.append(pieces[0]); ys.append(pieces[1]); ws.append(pieces[2])
    if not xs:
        return np.empty(0), np.empty(0), np.empty(0)
    t, v, w = (np.concatenate(a) for a in (xs, ys, ws))
    return (v, t, w) if swap else (t, v, w)


def _origin_cell(spec: KernelSpec, n_panels):
    """Polar rule for the unit cell at the origin.

    Returns nodes and weights valid for integrands ``r^-alpha * P(x, y)``
    with ``P = O(r^2)``: the radial factor ``r^(3-alpha)`` is absorbed by a
    Gauss-Jacobi rule, and the weights are rescaled so the rule can be fed
    the full integrand like any other.
    """
    delta, alpha = spec.delta, spec.alpha
    beta = 3.0 - alpha
    tj, wj = roots_jacobi(4, 0.0, beta)
    xs, ys, ws = [], [], []
    for th_lo, th_hi in ((0.0, math.pi / 4), (math.pi / 4, math.pi / 2)):
        th, wth = _gl(th_lo, th_hi, n_panels)
        c, s = np.cos(th), np.sin(th)
        radius = np.minimum(1.0 / np.maximum(c, s), float(delta))
        half = 0.5 * radius
        r = half[:, None] * (1.0 + tj[None, :])
        w = wth[:, None] * half[:, None] ** (beta + 1.0) * wj[None, :]
        # F r dr = r^beta * (F r^(alpha-2)) dr
        w = w * r ** (alpha - 2.0)
        xs.append((r * c[:, None]).ravel())
        ys.append((r * s[:, None]).ravel())
        ws.append(w.ravel())
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)


def quarter_disk_rule(spec: KernelSpec, quad_level: int = DEFAULT_QUAD_LEVEL):
    """Quadrature nodes ``(x, y, w)`` on {x, y >= 0, x^2 + y^2 <= delta^2}.

    Exact treatment near the origin assumes the integrand behaves like
    ``r^(2-alpha)`` or better there (true for every integrand used here).
    """
    if quad_level < 1:
        raise ValueError("quad_level must be >= 1")
    delta = spec.delta
    n = 2 ** quad_level
    d2 = delta * delta
    xs, ys, ws = [], [], []
    ox, oy, ow = _origin_cell(spec, n)
    xs.append(ox); ys.append(oy); ws.append(ow)
    tx, tw = _gl(0.0, 1.0, n)
    for a in range(delta):
        for b in range(delta):
            if a == 0 and b == 0:
                continue
            if a * a + b * b >= d2:
                continue
            if (a + 1) ** 2 + (b + 1) ** 2 <= d2:
                gx = a + tx
                gy = b + tx
                xs.append(np.repeat(gx, gy.size))
                ys.append(np.tile(gy, gx.size))
                ws.append(np.outer(tw, tw).ravel())
            else:
                cx, cy, cw = _cut_cell(a, a + 1, b, b + 1, delta, n)
                xs.append(cx); ys.append(cy); ws.append(cw)
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)


def second_moment(spec: KernelSpec, quad_level: int = DEFAULT_QUAD_LEVEL) -> float:
    """Numerical value of int_{B_delta} |s|^2 rho(|s|) ds (analytically 4)."""
    x, y, w = quarter_disk_rule(spec, quad_level)
    r2 = x * x + y * y
    return 4.0 * float(np.sum(w * r2 * kernel_rho(np.sqrt(r2), spec)))


def _hat_integrals(spec: KernelSpec, quad_level: int) -> np.ndarray:
    x, y, w = quarter_disk_rule(spec, quad_level)
    r2 = x * x + y * y
    g = w * kernel_rho(np.sqrt(r2), spec) * r2 / (x + y)
    ix = np.floor(x).astype(int)
    iy = np.floor(y).astype(int)
    fx = x - ix
    fy = y - iy
    side = spec.delta + 2
    size = side * side
    out = np.zeros(size)
    for dx, dy, share in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)),
                          (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
        out += np.bincount((ix + dx) * side + iy + dy, weights=g * share, minlength=size)
    return out.reshape(side, side)[: spec.delta + 1, : spec.delta + 1]


def _weights_from_integrals(integrals: np.ndarray, h: float = 1.0) -> np.ndarray:
    n = integrals.shape[0]
    p = np.arange(n)[:, None]
    q = np.arange(n)[None, :]
    denom = (p * p + q * q) * h
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(denom > 0, (p + q) / np.where(denom > 0, denom, 1.0) * integrals, 0.0)
    c[0, 0] = 0.0
    # the two triangles of the table are computed from mirrored nodes;
    # symmetrize away the rounding difference
    return 0.5 * (c + c.T)


def compute_coefficients(spec: KernelSpec, quad_level: int = DEFAULT_QUAD_LEVEL,
                         tol: float = COEFF_TOL, check: bool = True) -> CoeffTable:
    """Quadrature weights ``c[p, q]`` of the discrete nonlocal Laplacian.

    With ``check`` the table is recomputed one level finer; a change larger
    than ``tol`` in any weight raises :class:`ConvergenceError`.
    """
    if quad_level < 1:
        raise ValueError("quad_level must be >= 1")
    c = _weights_from_integrals(_hat_integrals(spec, quad_level))
    if check:
        finer = _weights_from_integrals(_hat_integrals(spec, quad_level + 1))
        err = float(np.max(np.abs(finer - c)))
        if not np.all(np.isfinite(c)) or err > tol:
            raise ConvergenceError(
                f"coefficients for {spec} changed by {err:.3e} > {tol:g} "
                f"between quad_level {quad_level} and {quad_level + 1}")
    return CoeffTable(spec.delta, spec.alpha, quad_level, c)


@lru_cache(maxsize=32)
def _cached(delta, alpha, quad_level):
    return compute_coefficients(KernelSpec(delta, alpha), quad_level)


def coefficients(spec: KernelSpec, quad_level: int = DEFAULT_QUAD_LEVEL,
                 cache_dir: str | Path | None = None) -> CoeffTable:
    """Memoized :func:`compute_coefficients`, optionally backed by a file cache."""
    if cache_dir is None:
        return _cached(spec.delta, spec.alpha, quad_level)
    path = Path(cache_dir) / f"coeff_d{spec.delta}_a{spec.alpha:g}_q{quad_level}.txt"
    if path.exists():
        table = load_table(path)
        if (table.delta, table.alpha, table.quad_level) == (spec.delta, spec.alpha, quad_level):
            return table
    table = _cached(spec.delta, spec.alpha, quad_level)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_table(table, path)
    return table


def save_table(table: CoeffTable, path) -> None:
    """Text cache: a version line, a parameter line, then the weight grid.

    ::

        # acseg-coeff-table v1
        # delta=4 alpha=1 quad_level=3 tolerance=1e-06
        <delta+1 rows of delta+1 floats, row index p, column index q>
    """
    header = (f"acseg-coeff-table v{CACHE_FORMAT_VERSION}\n"
              f"delta={table.delta} alpha={table.alpha!r} "
              f"quad_level={table.quad_level} tolerance={COEFF_TOL!r}")
    np.savetxt(path, table.weights, fmt="%.17e", header=header)


def load_table(path) -> CoeffTable:
    with open(path) as fh:
        first = fh.readline().strip()
        second = fh.readline().lstrip("# ").strip()
    if first != f"# acseg-coeff-table v{CACHE_FORMAT_VERSION}":
        raise ValueError(f"{path}: unrecognized coefficient cache header {first!r}")
    meta = dict(kv.split("=", 1) for kv in second.split())
    weights = np.atleast_2d(np.loadtxt(path, comments="#"))
    delta = int(meta["delta"])
    if weights.shape != (delta + 1, delta + 1):
        raise ValueError(f"{path}: weight grid shape {weights.shape} does not match delta={delta}")
    return CoeffTable(delta, float(meta["alpha"]), int(meta["quad_level"]), weights)


# -- operator and detector ----------------------------------------------------

def apply_nonlocal_laplacian(img, table: CoeffTable) -> np.ndarray:
    """Discrete nonlocal Laplacian of ``img`` with mirror (Neumann) padding."""
    arr = as_image(img)
    d = table.delta
    padded = pad_neumann(arr, d).data
    m, n = arr.shape
    out = np.zeros_like(arr)
    for p in range(d + 1):
        for q in range(d + 1):
            c = table.weights[p, q]
            if c == 0.0:
                continue
            # differences first, so constants give exactly zero
            out += c * ((padded[d + p:d + p + m, d + q:d + q + n] - arr)
                        + (padded[d - p:d - p + m, d + q:d + q + n] - arr)
                        + (padded[d + p:d + p + m, d - q:d - q + n] - arr)
                        + (padded[d - p:d - p + m, d - q:d - q + n] - arr))
    return out


def detect_edges(img, spec: KernelSpec, sigma: float,
                 quad_level: int = DEFAULT_QUAD_LEVEL,
                 table: CoeffTable | None = None) -> np.ndarray:
    """Edge mask: 1 where the nonlocal Laplacian is >= ``sigma``."""
    if table is None:
        table = coefficients(spec, quad_level)
    field = apply_nonlocal_laplacian(img, table)
    return (field >= sigma).astype(np.uint8)
