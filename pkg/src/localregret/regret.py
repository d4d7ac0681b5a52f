"""Regret meters over a completed trajectory.

All windowed meters follow the zero-padding convention: rounds before
``t = 1`` contribute zero gradient, and a window of width ``w`` always
divides by ``w``, even while it is only partly filled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import PreconditionError
from .geometry import as_point, displacement, is_interior
from .losses import LossSpec
from .optimizer import Trajectory

METERS = ("proposed_interior", "proposed_directional", "hazan", "calibration", "standard")

# Default interiority margin for the closed-form proposed meter.
INTERIOR_MARGIN = 1e-6
REBUILD_EVERY = 64
CALIBRATION_RANDOM_DIRECTIONS = 256


@dataclass(frozen=True)
class ConstantW:
    w: int

    def __post_init__(self):
        if int(self.w) != self.w or self.w < 1:
            raise PreconditionError("window width must be a positive integer")

    def width(self, t: int) -> int:
        return int(self.w)

    @property
    def capacity(self) -> int | None:
        return int(self.w)


@dataclass(frozen=True)
class Growing:
    """Window covering every round so far (w = t)."""

    def width(self, t: int) -> int:
        return t

    @property
    def capacity(self) -> int | None:
        return None


WindowSpec = ConstantW | Growing


class WindowAccumulator:
    """Running sum of the most recent ``capacity`` vectors.

    ``capacity=None`` keeps every vector (growing window). The running sum is
    recomputed from the buffer every ``REBUILD_EVERY`` insertions to stop
    floating-point drift.
    """

    def __init__(self, dim: int, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise PreconditionError("capacity must be >= 1")
        self.dim = dim
        self.capacity = capacity
        size = capacity if capacity is not None else 64
        self._buffer = np.zeros((size, dim))
        self._count = 0
        self._head = 0
        self.running_sum = np.zeros(dim)
        self.steps_since_rebuild = 0

    def __len__(self) -> int:
        return self._count if self.capacity is None else min(self._count, self.capacity)

    def push(self, v) -> None:
        v = np.asarray(v, dtype=np.float64).reshape(self.dim)
        if self.capacity is None:
            if self._count == self._buffer.shape[0]:
                self._buffer = np.vstack([self._buffer, np.zeros_like(self._buffer)])
            self._buffer[self._count] = v
            self.running_sum += v
        elif self.capacity == 1:
            # a single slot holds exactly the newest vector
            self.running_sum = v.copy()
            self._buffer[0] = v
        else:
            self.running_sum += v - self._buffer[self._head]
            self._buffer[self._head] = v
            self._head = (self._head + 1) % self.capacity
        self._count += 1
        self.steps_since_rebuild += 1
        if self.steps_since_rebuild >= REBUILD_EVERY:
            self.rebuild()

    def rebuild(self) -> None:
        # Empty slots of a fixed ring are zero, matching the padding convention.
        self.running_sum = self.exact_sum()
        self.steps_since_rebuild = 0

    def exact_sum(self) -> np.ndarray:
        if self.capacity is None:
            return np.sum(self._buffer[: self._count], axis=0)
        return np.sum(self._buffer, axis=0)


@dataclass(frozen=True, eq=False)
class RegretSeries:
    meter: str
    instantaneous: np.ndarray
    cumulative: np.ndarray
    window: WindowSpec | None = None
    params: dict = field(default_factory=dict)

    @classmethod
    def from_terms(cls, meter: str, terms, window=None, params=None) -> "RegretSeries":
        terms = np.asarray(terms, dtype=np.float64)
        terms.flags.writeable = False
        cumulative = np.cumsum(terms)
        cumulative.flags.writeable = False
        return cls(meter, terms, cumulative, window, dict(params or {}))

    def __len__(self) -> int:
        return len(self.instantaneous)

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if len(self) else 0.0


def _window_sums(values: np.ndarray, window: WindowSpec) -> np.ndarray:
    """Sum over the window ending at each t, via the incremental accumulator."""
    T, d = values.shape
    acc = WindowAccumulator(d, window.capacity)
    out = np.empty((T, d))
    for k in range(T):
        acc.push(values[k])
        out[k] = acc.running_sum
    return out


def _widths(T: int, window: WindowSpec) -> np.ndarray:
    return np.array([window.width(t) for t in range(1, T + 1)], dtype=np.float64)


def windowed_gradient_average(traj: Trajectory, t: int, window: WindowSpec) -> np.ndarray:
    """(1/w) * sum of g_s for s in (t - w, t], by direct summation."""
    if not 1 <= t <= len(traj):
        raise PreconditionError(f"t={t} outside 1..{len(traj)}")
    w = window.width(t)
    start = max(t - w, 0)
    return np.sum(traj.gs[start:t], axis=0) / w


def windowed_gradient_averages(traj: Trajectory, window: WindowSpec) -> np.ndarray:
    """Windowed averages for every t, shape (T, d)."""
    return _window_sums(traj.gs, window) / _widths(len(traj), window)[:, None]


def proposed_regret_interior(
    traj: Trajectory, window: WindowSpec, margin: float = INTERIOR_MARGIN
) -> RegretSeries:
    """Closed form of the proposed regret at interior iterates: ||window avg gradient||^2."""
    inside = np.atleast_1d(is_interior(traj.set, traj.xs, margin))
    if not np.all(inside):
        bad = int(np.argmin(inside)) + 1
        raise PreconditionError(
            f"iterate at step {bad} is not interior (margin {margin}); "
            "the closed form holds only at interior points"
        )
    avg = windowed_gradient_averages(traj, window)
    terms = np.sum(avg * avg, axis=1)
    return RegretSeries.from_terms("proposed_interior", terms, window, {"margin": margin})


def directional_terms(traj: Trajectory, u) -> np.ndarray:
    """<D_u(x_s), g_s> for every s."""
    u = as_point(u, "u")
    disp = displacement(traj.set, traj.xs, u)
    return np.sum(disp * traj.gs, axis=1)


def proposed_regret_directional(traj: Trajectory, window: WindowSpec, u) -> RegretSeries:
    """Proposed regret for one fixed perturbation direction ``u``."""
    inner = directional_terms(traj, u)
    sums = _window_sums(inner[:, None], window)[:, 0]
    avg = sums / _widths(len(traj), window)
    return RegretSeries.from_terms(
        "proposed_directional", avg * avg, window, {"u": tuple(np.asarray(u, float).tolist())}
    )


def hazan_local_regret(traj: Trajectory, spec: LossSpec | None = None, w: int = 1) -> RegretSeries:
    """Past losses' gradients averaged at the current iterate, squared norm.

    The loss family defaults to the one that produced ``traj``.
    """
    spec = traj.spec if spec is None else spec
    if int(w) != w or w < 1:
        raise PreconditionError("w must be a positive integer")
    T = len(traj)
    terms = np.empty(T)
    for k in range(T):
        t = k + 1
        x = traj.xs[k]
        total = np.zeros(traj.dim)
        for s in range(t, max(t - w, 0), -1):
            total += spec.gradient(s, x)
        avg = total / w
        terms[k] = float(avg @ avg)
    return RegretSeries.from_terms("hazan", terms, ConstantW(int(w)), {"w": int(w)})


@dataclass(frozen=True)
class CalibrationGap:
    value: float
    exact: bool  # False: sampled lower estimate (some iterate near the boundary)
    maximizer: tuple


def calibration_gap(
    traj: Trajectory, radius: float, rng: np.random.Generator | None = None
) -> CalibrationGap:
    """sup over ||u|| <= radius of -(1/T) * sum_t <D_u(x_t), g_t>."""
    if not radius > 0:
        raise PreconditionError("radius must be positive")
    T = len(traj)
    mean_g = traj.gs.sum(axis=0) / T
    if np.all(np.atleast_1d(is_interior(traj.set, traj.xs, radius))):
        norm = float(np.linalg.norm(mean_g))
        u_star = -radius * mean_g / norm if norm > 0 else np.zeros(traj.dim)
        return CalibrationGap(radius * norm, True, tuple(u_star.tolist()))

    rng = np.random.default_rng(0) if rng is None else rng
    eye = np.eye(traj.dim)
    rand = rng.standard_normal((CALIBRATION_RANDOM_DIRECTIONS, traj.dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    directions = radius * np.vstack([eye, -eye, rand])
    best, best_u = 0.0, np.zeros(traj.dim)
    for u in directions:
        gap = -float(np.sum(directional_terms(traj, u))) / T
        if gap > best:
            best, best_u = gap, u
    return CalibrationGap(best, False, tuple(best_u.tolist()))


@dataclass(frozen=True)
class StandardRegret:
    value: float
    cumulative_loss: float
    hindsight_min: float
    minimizer: tuple
    grid: int
    resolution: tuple  # lattice spacing per coordinate


def standard_regret(traj: Trajectory, spec: LossSpec | None = None, grid: int = 401) -> StandardRegret:
    """Cumulative loss minus a brute-force lattice estimate of the best fixed point."""
    spec = traj.spec if spec is None else spec
    d = traj.dim
    if d > 2 or not traj.set.bounded:
        raise PreconditionError(
            "hindsight search infeasible: brute force needs d <= 2 and a bounded set"
        )
    if grid < 2:
        raise PreconditionError("grid must have at least 2 points per axis")
    lo, hi = traj.set.bounding_box()
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(d)]
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    lattice = lattice[np.atleast_1d(traj.set.contains(lattice))]
    totals = np.zeros(len(lattice))
    for t in range(1, len(traj) + 1):
        totals += spec.value(t, lattice)
    k = int(np.argmin(totals))
    cumulative = math.fsum(float(spec.value(t, x)) for t, x in enumerate(traj.xs, start=1))
    best = float(totals[k])
    return StandardRegret(
        value=cumulative - best,
        cumulative_loss=cumulative,
        hindsight_min=best,
        minimizer=tuple(lattice[k].tolist()),
        grid=grid,
        resolution=tuple(((hi - lo) / (grid - 1)).tolist()),
    )


def calibration_series(
    traj: Trajectory, radius: float, rng: np.random.Generator | None = None
) -> tuple[RegretSeries, CalibrationGap]:
    """Per-step terms -<D_u(x_t), g_t> at the maximizing u; cumulative[T] / T is the gap."""
    gap = calibration_gap(traj, radius, rng)
    terms = -directional_terms(traj, np.array(gap.maximizer))
    series = RegretSeries.from_terms(
        "calibration", terms, None, {"radius": radius, "exact": gap.exact, "u": gap.maximizer}
    )
    return series, gap


def standard_regret_series(
    traj: Trajectory, spec: LossSpec | None = None, grid: int = 401
) -> tuple[RegretSeries, StandardRegret]:
    """Per-step f_t(x_t) - f_t(x*) against the lattice hindsight minimizer x*."""
    spec = traj.spec if spec is None else spec
    result = standard_regret(traj, spec, grid)
    best = np.array(result.minimizer)
    terms = [
        float(spec.value(t, x)) - float(spec.value(t, best))
        for t, x in enumerate(traj.xs, start=1)
    ]
    series = RegretSeries.from_terms("standard", terms, None, {"grid": grid})
    return series, result
