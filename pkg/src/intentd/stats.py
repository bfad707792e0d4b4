"""Summary statistics and linear fits for benchmark samples."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean_ms: float
    stddev_ms: float
    ci95_ms: float
    cov: float


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def t_quantile(probability: float, df: int) -> float:
    from scipy import stats as _scipy_stats  # deferred: slow import

    return float(_scipy_stats.t.ppf(probability, df))


def summarize(samples: Sequence[float]) -> SummaryStats:
    """Mean, sample standard deviation, Student-t 95% CI half-width, CoV.

    Needs at least two samples; with n - 1 degrees of freedom the half-width
    is t(0.975, n-1) * stddev / sqrt(n).
    """
    n = len(samples)
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    mean = math.fsum(samples) / n
    variance = math.fsum((x - mean) ** 2 for x in samples) / (n - 1)
    stddev = math.sqrt(variance)
    ci95 = t_quantile(0.975, n - 1) * stddev / math.sqrt(n)
    cov = stddev / mean if mean != 0 else 0.0
    return SummaryStats(n=n, mean_ms=mean, stddev_ms=stddev, ci95_ms=ci95, cov=cov)


def fit_linear(points: Sequence[tuple[float, float]]) -> LinearFit:
    """Ordinary least squares y = slope * x + intercept with r-squared.

    Needs at least three points with non-identical x values; a flat response
    (zero total variance) reports r_squared = 1.0.
    """
    if len(points) < 3:
        raise ValueError(f"need at least 3 points, got {len(points)}")
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    n = len(xs)
    x_mean = math.fsum(xs) / n
    y_mean = math.fsum(ys) / n
    sxx = math.fsum((x - x_mean) ** 2 for x in xs)
    if sxx == 0:
        raise ValueError("degenerate fit: all x values are equal")
    sxy = math.fsum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    ss_res = math.fsum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = math.fsum((y - y_mean) ** 2 for y in ys)
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return LinearFit(slope=slope, intercept=intercept, r_squared=r_squared)
