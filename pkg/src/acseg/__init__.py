"""Two-phase image segmentation with a stabilized Allen-Cahn flow and a nonlocal edge detector."""

from .baseline_edge import BaselineSpec, canny_detect, gradient_detect, log_detect
from .etd_solver import FittingField, SolverParams, evolve_to_steady, spectral_plan
from .image_core import ShapeSpec, add_gaussian_noise, load_image, save_image, synth_two_phase
from .metrics import MetricReport, mask_metrics, report, seg_error
from .nonlocal_edge import KernelSpec, coefficients, detect_edges
from .segmentation import SegConfig, SegmentationResult, segment

__version__ = "0.1.0"
