"""L1 discrepancy scores between a reference segmentation and a result."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricReport:
    fpr: float
    fnr: float
    rse: float
    err: float = math.nan

    @property
    def degenerate(self) -> bool:
        return any(math.isinf(v) for v in (self.fpr, self.fnr, self.rse, self.err))


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mask_metrics(exact, computed):
    """(FPR, FNR, RSE) of ``computed`` against ``exact``.

    Denominators are the L1 norms of ``exact``, ``computed`` and their sum
    respectively; a zero denominator with a nonzero numerator gives ``inf``.
    """
    s1, s2 = _pair(exact, computed)
    diff = float(np.abs(s1 - s2).sum())
    n1 = float(np.abs(s1).sum())
    n2 = float(np.abs(s2).sum())
    return _ratio(diff, n1), _ratio(diff, n2), _ratio(diff, n1 + n2)


def seg_error(U, exact) -> float:
    """||U - exact||_1 / ||U||_1 (``inf`` when U is identically zero)."""
    u, ex = _pair(U, exact)
    return _ratio(float(np.abs(u - ex).sum()), float(np.abs(u).sum()))


def report(exact, computed) -> MetricReport:
    fpr, fnr, rse = mask_metrics(exact, computed)
    return MetricReport(fpr, fnr, rse, seg_error(computed, exact))
