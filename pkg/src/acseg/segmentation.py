"""Two-stage alternating minimization for phase-field Chan-Vese segmentation.

Stage 1 evolves the initial field once with a large diffusion parameter and
fitting means (C1, C2) = (1, 0), which wipes out isolated specks in the
initial guess. Stage 2 alternates a steady-state solve at the small
diffusion parameter with the closed-form mean update until the phase field
stops changing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import etd_solver as etd
from .image_core import as_image, load_mask
from .nonlocal_edge import KernelSpec, detect_edges

DEGENERATE_MASS = 1e-12


class InvalidStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class SegConfig:
    stage1_epsilon: float = 5.0
    stage2_epsilon: float = 0.1
    epsilon1: float = 0.5
    lambda1: float = 1.0
    lambda2: float = 1.0
    init: str = "nonlocal"          # nonlocal | threshold | mask
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec(5, 1.0))
    sigma: float = 0.05
    i0: float = 0.5
    mask_path: str | None = None
    scheme: str = "etd1"
    dt: float = 0.1
    steady_tol: float = 1e-6
    max_steps: int = 10_000
    outer_tol: float = 1e-4
    max_outer: int = 50
    outer_criterion: str = "field"  # field | mask
    stabilizer: float | None = None  # None -> bound recomputed per stage
    record_energy: bool = True
    workers: int | None = None

    def __post_init__(self):
        if not self.stage1_epsilon >= self.stage2_epsilon > 0:
            raise ValueError("need stage1_epsilon >= stage2_epsilon > 0")
        if self.init not in ("nonlocal", "threshold", "mask"):
            raise ValueError(f"unknown init mode {self.init!r}")
        if self.scheme not in etd.STEPPERS:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.outer_criterion not in ("field", "mask"):
            raise ValueError(f"unknown outer criterion {self.outer_criterion!r}")
        if self.init == "nonlocal" and self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def solver_params(self, epsilon: float) -> etd.SolverParams:
        return etd.SolverParams(epsilon=epsilon, epsilon1=self.epsilon1,
                                lambda1=self.lambda1, lambda2=self.lambda2,
                                stabilizer=self.stabilizer, dt=self.dt,
                                steady_tol=self.steady_tol, max_steps=self.max_steps)


@dataclass
class SegmentationResult:
    phase: np.ndarray
    mask: np.ndarray
    contour: list
    c1: float
    c2: float
    diagnostics: list            # RunDiagnostics per solve, Stage 1 first
    inner_steps: list            # k_1, ..., k_m
    epsilons: list               # diffusion parameter of each solve
    outer_energy: list           # E(u^k, C^k) at the Stage-2 epsilon
    initial: np.ndarray
    stage1_phase: np.ndarray
    converged: bool
    cpu_seconds: float = 0.0

    @property
    def outer_loops(self) -> int:
        return len(self.inner_steps)

    @property
    def bound_min(self) -> float:
        return min(min(d.min_u) for d in self.diagnostics)

    @property
    def bound_max(self) -> float:
        return max(max(d.max_u) for d in self.diagnostics)

    def summary(self) -> dict:
        k = self.inner_steps
        return {
            "converged": self.converged,
            "m": self.outer_loops,
            "k1": k[0],
            "k2": k[1] if len(k) > 1 else None,
            "k_rest": k[2:],
            "C1": self.c1,
            "C2": self.c2,
            "min": self.bound_min,
            "1-max": 1.0 - self.bound_max,
            "cpu_seconds": self.cpu_seconds,
        }


def update_means(U, image, eps1: float, previous=(1.0, 0.0)):
    """Phase averages of ``image`` weighted by H(U - 1/2) and 1 - H(U - 1/2).

    A phase with (numerically) zero mass keeps its previous mean.
    """
    U = np.asarray(U, dtype=np.float64)
    image = as_image(image)
    if U.shape != image.shape:
        raise ValueError(f"U shape {U.shape} does not match image {image.shape}")
    if not np.all(np.isfinite(U)):
        raise InvalidStateError("phase field contains non-finite values")
    H = etd.heaviside_reg(U - 0.5, eps1)
    m1 = float(H.sum())
    m2 = float((1.0 - H).sum())
    if m1 < DEGENERATE_MASS and m2 < DEGENERATE_MASS:
        raise InvalidStateError("both phases are empty; check U range and epsilon1")
    c1 = float((H * image).sum()) / m1 if m1 >= DEGENERATE_MASS else float(previous[0])
    c2 = float(((1.0 - H) * image).sum()) / m2 if m2 >= DEGENERATE_MASS else float(previous[1])
    return c1, c2


def initialize(image, config: SegConfig, mask=None) -> np.ndarray:
    """Initial phase field u^0 in {0, 1}."""
    image = as_image(image)
    if config.init == "nonlocal":
        return detect_edges(image, config.kernel, config.sigma).astype(np.float64)
    if config.init == "threshold":
        return (image >= config.i0).astype(np.float64)
    if mask is None:
        if config.mask_path is None:
            raise ValueError("mask init needs a mask array or mask_path")
        mask = load_mask(Path(config.mask_path))
    mask = np.asarray(mask)
    if mask.shape != image.shape:
        raise ValueError(f"mask shape {mask.shape} does not match image {image.shape}")
    return (mask > 0).astype(np.float64)


def extract_contour(U) -> list:
    """4-adjacent pixel pairs straddling 1/2, as ``((i_in, j_in), (i_out, j_out))``.

    The first member of each pair is the one with value >= 1/2.
    """
    inside = np.asarray(U, dtype=np.float64) >= 0.5
    pairs = []
    for axis in (0, 1):
        a = inside[:-1, :] if axis == 0 else inside[:, :-1]
        b = inside[1:, :] if axis == 0 else inside[:, 1:]
        di, dj = (1, 0) if axis == 0 else (0, 1)
        for i, j in zip(*np.nonzero(a != b)):
            p, q = (int(i), int(j)), (int(i) + di, int(j) + dj)
            pairs.append((p, q) if a[i, j] else (q, p))
    return pairs


def contour_overlay(image, contour) -> np.ndarray:
    out = as_image(image).copy()
    for (i, j), _ in contour:
        out[i, j] = 1.0
    return out


def _solve(U, image, c1, c2, epsilon, config, plans):
    params = config.solver_params(epsilon)
    key = (epsilon, U.shape)
    if key not in plans:
        plans[key] = etd.spectral_plan(U.shape[1], U.shape[0], params, workers=config.workers)
    fit = etd.FittingField.from_params(image, c1, c2, params)
    return etd.evolve_to_steady(U, fit, plans[key], params, config.scheme,
                                record_energy=config.record_energy)


def segment(image, config: SegConfig, mask=None) -> SegmentationResult:
    """Run the two-stage algorithm; never raises on non-convergence."""
    image = as_image(image)
    if image.min() < 0.0 or image.max() > 1.0:
        raise ValueError("image intensities must lie in [0, 1]")
    if min(image.shape) < 2:
        raise ValueError("image must be at least 2x2")
    t0 = time.process_time()
    plans: dict = {}
    u0 = initialize(image, config, mask)

    # Stage 1
    c1, c2 = 1.0, 0.0
    u, k, diag = _solve(u0, image, c1, c2, config.stage1_epsilon, config, plans)
    diagnostics, steps, epsilons = [diag], [k], [config.stage1_epsilon]
    converged = diag.converged
    c1, c2 = update_means(u, image, config.epsilon1, (c1, c2))
    stage1 = u.copy()

    # Stage 2
    params2 = config.solver_params(config.stage2_epsilon)
    outer_energy = [etd.discrete_energy(u, c1, c2, image, params2)]
    outer_done = False
    for _ in range(config.max_outer):
        u_new, k, diag = _solve(u, image, c1, c2, config.stage2_epsilon, config, plans)
        diagnostics.append(diag)
        steps.append(k)
        epsilons.append(config.stage2_epsilon)
        converged = converged and diag.converged
        c1, c2 = update_means(u_new, image, config.epsilon1, (c1, c2))
        outer_energy.append(etd.discrete_energy(u_new, c1, c2, image, params2))
        if config.outer_criterion == "mask":
            change = float(np.any((u_new >= 0.5) != (u >= 0.5)))
        else:
            change = float(np.max(np.abs(u_new - u)))
        u = u_new
        if change < config.outer_tol:
            outer_done = True
            break

    contour = extract_contour(u)
    return SegmentationResult(
        phase=u, mask=(u >= 0.5).astype(np.uint8), contour=contour, c1=c1, c2=c2,
        diagnostics=diagnostics, inner_steps=steps, epsilons=epsilons,
        outer_energy=outer_energy, initial=u0, stage1_phase=stage1,
        converged=converged and outer_done, cpu_seconds=time.process_time() - t0)


def with_scheme(config: SegConfig, scheme: str, init: str | None = None) -> SegConfig:
    return replace(config, scheme=scheme, init=init or config.init)
