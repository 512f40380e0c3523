"""Statistical primitives shared by the experiments.

Kolmogorov-Smirnov statistics are returned without p-values on purpose:
acceptance thresholds are fixed critical values stated per experiment,
which sidesteps asymptotic-distribution subtleties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import ndtr


class EmptySampleError(ValueError):
    pass


@dataclass
class Sample:
    values: np.ndarray
    sorted: bool = False

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.sorted and np.any(np.diff(self.values) < 0):
            raise ValueError("sorted flag set on unsorted values")

    def ensure_sorted(self) -> np.ndarray:
        if not self.sorted:
            self.values = np.sort(self.values)
            self.sorted = True
        return self.values


def _as_sorted(x: Union[Sample, np.ndarray, Sequence[float]]) -> np.ndarray:
    if isinstance(x, Sample):
        return x.ensure_sorted()
    arr = np.asarray(x, dtype=float)
    return np.sort(arr)


def normal_cdf(x):
    """Standard normal CDF; correctly rounded to ~1e-16 (erf-based)."""
    return ndtr(x)


def ks_one_sample(sample, cdf: Callable) -> float:
    """sup_x |F_n(x) - F(x)| for a nondecreasing reference CDF."""
    xs = _as_sorted(sample)
    n = len(xs)
    if n == 0:
        raise EmptySampleError("one-sample KS needs a nonempty sample")
    F = np.asarray(cdf(xs), dtype=float)
    up = np.max(np.arange(1, n + 1) / n - F)
    dn = np.max(F - np.arange(0, n) / n)
    return float(max(up, dn))


def ks_two_sample(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)| of the two empirical CDFs."""
    xa = _as_sorted(a)
    xb = _as_sorted(b)
    if len(xa) == 0 or len(xb) == 0:
        raise EmptySampleError("two-sample KS needs nonempty samples")
    allv = np.concatenate([xa, xb])
    cdf_a = np.searchsorted(xa, allv, side="right") / len(xa)
    cdf_b = np.searchsorted(xb, allv, side="right") / len(xb)
    return float(np.max(np.abs(cdf_a - cdf_b)))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


def loglog_slope(points) -> SlopeFit:
    """OLS of log(value) on log(n) for (n, value) pairs, value > 0."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (n, value) points")
    if np.any(pts <= 0):
        raise ValueError("log-log regression needs positive n and values")
    x = np.log(pts[:, 0])
    y = np.log(pts[:, 1])
    A = np.column_stack([x, np.ones_like(x)])
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(y - y.mean(), y - y.mean()))
    if ss_tot <= 0.0:
        r2 = 1.0 if ss_res < 1e-24 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return SlopeFit(slope=float(coef[0]), intercept=float(coef[1]), r_squared=r2)


def wilson_interval(successes: int, n: int, z: float = 2.5758293035489004) -> tuple:
    """Wilson score interval; default z is the two-sided 99% point."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def mean_ci(values, z: float = 2.5758293035489004) -> tuple:
    """(mean, low, high): batch-mean interval mean +- z * s / sqrt(M)."""
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        raise EmptySampleError("mean_ci needs a nonempty sample")
    m = float(v.mean())
    if len(v) == 1:
        return m, m, m
    se = float(v.std(ddof=1) / math.sqrt(len(v)))
    return m, m - z * se, m + z * se


def standard_error(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(v.std(ddof=1) / math.sqrt(len(v)))
