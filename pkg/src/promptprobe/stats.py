"""Bootstrap confidence intervals and the template-metric regression.

Resampling is at utterance granularity: each bootstrap set redraws the
per-utterance edit counts with replacement and recomputes the micro WER,
and the interval is the percentile interval of those statistics. Streams
are pinned to numpy's PCG64: resample ``i`` draws from
``Generator(PCG64(SeedSequence((seed, i))))``, so intervals are
reproducible for a given seed regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateX, EmptyRecords, TooFewPoints, ZeroReferenceLength
from .metrics import EditCounts


@dataclass(frozen=True)
class BootstrapConfig:
    resamples: int = 1000
    confidence: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.resamples < 1:
            raise ValueError("resamples must be >= 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0, 1)")


def _resample_indices(seed: int, index: int, n: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))
    return rng.integers(0, n, size=n)


def bootstrap_ci(records: Sequence[EditCounts], cfg: BootstrapConfig) -> tuple[float, float]:
    """Percentile bootstrap interval for the micro WER of ``records``."""
    if not records:
        raise EmptyRecords("cannot bootstrap zero records")
    edits = np.array([c.total for c in records], dtype=np.int64)
    ref_lens = np.array([c.ref_len for c in records], dtype=np.int64)
    if ref_lens.sum() == 0:
        raise ZeroReferenceLength("total reference length is zero")

    n = len(records)
    idx = np.empty((cfg.resamples, n), dtype=np.intp)
    for i in range(cfg.resamples):
        idx[i] = _resample_indices(cfg.seed, i, n)
    stats = edits[idx].sum(axis=1) / ref_lens[idx].sum(axis=1)

    alpha = 1.0 - cfg.confidence
    low, high = np.quantile(stats, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(low), float(high)


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("a fit needs at least two points")
        if not -1e-9 <= self.r_squared <= 1 + 1e-9:
            raise ValueError(f"r_squared out of range: {self.r_squared}")


def linear_regression(points: Sequence[tuple[float, float]]) -> RegressionFit:
    """Ordinary least squares of y on x with an intercept.

    A horizontal-line fit (all residuals zero, zero y variance) reports
    r_squared = 1.
    """
    if len(points) < 2:
        raise TooFewPoints(f"need >= 2 points, got {len(points)}")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.ptp(x) == 0:
        raise DegenerateX("all x values are equal")

    x_mean = x.mean()
    y_mean = y.mean()
    sxx = float(((x - x_mean) ** 2).sum())
    sxy = float(((x - x_mean) * (y - y_mean)).sum())
    slope = sxy / sxx
    intercept = float(y_mean - slope * x_mean)

    residuals = y - (slope * x + intercept)
    ss_res = float((residuals**2).sum())
    ss_tot = float(((y - y_mean) ** 2).sum())
    if ss_tot == 0.0:
        r_squared = 1.0
    else:
        r_squared = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RegressionFit(slope=slope, intercept=intercept, r_squared=r_squared, n_points=len(points))
