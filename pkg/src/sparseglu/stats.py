"""Analysis layer: critical sparsity, Silverman-bandwidth Gaussian KDE, and
simple least-squares trend fits."""

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .harness import SweepCurve, SweepPoint


@dataclass(frozen=True)
class CriticalSparsity:
    value: float
    retention_threshold: float
    source_point: SweepPoint


@dataclass(frozen=True)
class TrendFit:
    slope: float
    intercept: float
    residual_sum_of_squares: float
    n_points: int


def critical_sparsity(curve: SweepCurve, retention: float = 0.99) -> CriticalSparsity:
    """Highest empirical induced sparsity among points retaining at least
    `retention` of the dense metric. No interpolation; if nothing qualifies,
    a synthetic dense point (sparsity 0, normalized 1) is returned."""
    if not (0.0 < retention <= 1.0):
        raise InputError(f"retention must be in (0, 1], got {retention}")
    if not curve.points:
        raise InputError("curve has no points")
    qualifying = [p for p in curve.points if p.normalized_metric >= retention]
    if not qualifying:
        dense_point = SweepPoint(
            p_threshold=float("nan"),
            induced_sparsity=0.0,
            raw_metric=curve.dense_metric,
            normalized_metric=1.0,
        )
        return CriticalSparsity(0.0, retention, dense_point)
    best = max(qualifying, key=lambda p: p.induced_sparsity)
    return CriticalSparsity(best.induced_sparsity, retention, best)


def silverman_bandwidth(xs) -> float:
    """h = 0.9 * min(sample std, IQR / 1.34) * n^(-1/5).

    Sample std uses the n-1 denominator; IQR uses linear-interpolation
    (type-7) quantiles.
    """
    xs = np.asarray(xs, dtype=np.float64)
    n = xs.shape[0]
    if n < 2:
        raise InputError("silverman_bandwidth needs at least 2 samples")
    std = float(np.std(xs, ddof=1))
    q75, q25 = np.percentile(xs, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(std, iqr / 1.34)
    if spread <= 0.0:
        raise InputError("silverman_bandwidth: data has zero spread")
    return 0.9 * spread * n ** (-0.2)


def gaussian_kde(xs, bandwidth: float, grid) -> np.ndarray:
    """f(g) = (1 / (n h)) * sum_i phi((g - x_i) / h), phi standard normal."""
    if bandwidth <= 0.0:
        raise InputError(f"bandwidth must be positive, got {bandwidth}")
    xs = np.asarray(xs, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or np.any(np.diff(grid) < 0):
        raise InputError("grid must be a 1-D ascending array")
    z = (grid[:, None] - xs[None, :]) / bandwidth
    phi = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    return phi.sum(axis=1) / (xs.shape[0] * bandwidth)


def default_kde_grid(xs, bandwidth: float, n_points: int = 256) -> np.ndarray:
    """Grid extending 8 bandwidths beyond the data range, wide enough for the
    density to integrate to ~1."""
    xs = np.asarray(xs, dtype=np.float64)
    lo = xs.min() - 8.0 * bandwidth
    hi = xs.max() + 8.0 * bandwidth
    return np.linspace(lo, hi, n_points)


def ols_trend(x, y) -> TrendFit:
    """Closed-form simple linear regression minimizing sum (y - a - b x)^2."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("x and y must be 1-D arrays of equal length")
    n = x.shape[0]
    if n < 2:
        raise InputError("ols_trend needs at least 2 points")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise InputError("ols_trend: x values have zero variance")
    slope = float(np.sum((x - xm) * (y - ym))) / sxx
    intercept = ym - slope * xm
    rss = float(np.sum((y - (intercept + slope * x)) ** 2))
    return TrendFit(slope=slope, intercept=float(intercept), residual_sum_of_squares=rss, n_points=n)
