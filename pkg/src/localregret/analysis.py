"""Growth-rate diagnostics for cumulative regret and bound reports."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import PreconditionError
from .regret import RegretSeries

MIN_TAIL_POINTS = 10
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    intercept: float
    r_squared: float
    tail_start: int


def _cumulative(series) -> np.ndarray:
    if isinstance(series, RegretSeries):
        return np.asarray(series.cumulative, dtype=np.float64)
    return np.asarray(series, dtype=np.float64)


def default_tail_start(T: int) -> int:
    return max(1, T // 5)


def _tail(series, tail_start: int | None) -> tuple[np.ndarray, np.ndarray, int]:
    y = _cumulative(series)
    T = len(y)
    tail_start = default_tail_start(T) if tail_start is None else int(tail_start)
    if tail_start < 1:
        raise PreconditionError("tail_start must be >= 1")
    if T < tail_start + MIN_TAIL_POINTS:
        raise PreconditionError(
            f"series of length {T} too short for tail_start={tail_start} "
            f"(needs {tail_start + MIN_TAIL_POINTS})"
        )
    t = np.arange(tail_start, T + 1, dtype=np.float64)
    return t, y[tail_start - 1 :], tail_start


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line y ~ slope * x + intercept; returns (slope, intercept, r^2).

    r^2 is 0 when y has no variance.
    """
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    if syy == 0.0:
        return slope, intercept, 0.0
    resid = y - (slope * x + intercept)
    r2 = 1.0 - float(resid @ resid) / syy
    return slope, intercept, min(1.0, max(0.0, r2))


def growth_exponent(series, tail_start: int | None = None) -> GrowthFit:
    """Slope of ln(cumulative) against ln(t) over t >= ``tail_start``."""
    t, y, tail_start = _tail(series, tail_start)
    if np.any(y <= 0):
        raise PreconditionError("cumulative values must be positive on the tail (log undefined)")
    slope, intercept, r2 = _linear_fit(np.log(t), np.log(y))
    return GrowthFit(slope, intercept, r2, tail_start)


def log_fit_quality(series, tail_start: int | None = None) -> float:
    """r^2 of cumulative regret fitted linearly against 1 + ln t."""
    t, y, _ = _tail(series, tail_start)
    return _linear_fit(1.0 + np.log(t), y)[2]


def linear_fit_quality(series, tail_start: int | None = None) -> float:
    """r^2 of cumulative regret fitted linearly against t."""
    t, y, _ = _tail(series, tail_start)
    return _linear_fit(t, y)[2]


@dataclass(frozen=True, eq=False)
class BoundReport:
    t: np.ndarray
    cumulative: np.ndarray
    bound: np.ndarray
    ratio: np.ndarray
    max_ratio: float
    passed: bool
    violations: tuple  # 1-based t where the bound is exceeded

    def rows(self):
        for k in range(len(self.t)):
            yield int(self.t[k]), float(self.cumulative[k]), float(self.bound[k]), float(self.ratio[k])


def bound_report(series, bound_values) -> BoundReport:
    """Compare cumulative regret with a bound at every horizon."""
    y = _cumulative(series)
    b = np.asarray(bound_values, dtype=np.float64)
    if y.shape != b.shape:
        raise PreconditionError(f"length mismatch: {len(y)} series values vs {len(b)} bounds")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(y == 0, 0.0, y / b)
    ratio = np.where((b == 0) & (y > 0), math.inf, ratio)
    over = np.nonzero(ratio > 1.0 + BOUND_TOL)[0] + 1
    max_ratio = float(np.max(ratio)) if len(ratio) else 0.0
    return BoundReport(
        t=np.arange(1, len(y) + 1),
        cumulative=y,
        bound=b,
        ratio=ratio,
        max_ratio=max_ratio,
        passed=len(over) == 0,
        violations=tuple(int(v) for v in over),
    )
