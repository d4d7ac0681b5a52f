"""Projected online gradient descent with full trajectory recording."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .exceptions import NumericError, PreconditionError
from .geometry import MEMBERSHIP_TOL, FeasibleSet, as_point
from .losses import LossSpec


@dataclass(frozen=True)
class Constant:
    eta: float
    kind = "constant"

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise PreconditionError("eta must be positive and finite")

    def rate(self, t: int) -> float:
        return float(self.eta)


@dataclass(frozen=True)
class InverseSqrt:
    """eta_t = eta / sqrt(t), t starting at 1."""

    eta: float
    kind = "inverse_sqrt"

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise PreconditionError("eta must be positive and finite")

    def rate(self, t: int) -> float:
        return float(self.eta) / math.sqrt(t)


LearningRateSchedule = Constant | InverseSqrt


@dataclass(frozen=True)
class StepRecord:
    t: int
    x: np.ndarray
    g: np.ndarray
    eta: float
    loss: float
    pre_projection: np.ndarray


def step(set: FeasibleSet, x, g, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """One projected gradient step; returns ``(next, pre_projection)``."""
    x = as_point(x)
    g = np.asarray(g, dtype=np.float64)
    set.check_dim(x)
    if not np.all(np.isfinite(g)):
        raise NumericError("gradient is not finite")
    if not set.contains(x):
        raise PreconditionError("step requires x inside the feasible set")
    pre = x - eta * g
    return set.project(pre), pre


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class Trajectory:
    """Immutable record of an online run.

    Row ``k`` of each array belongs to time ``t = k + 1``. ``final`` is the
    point ``x_{T+1}`` produced by the last update.
    """

    def __init__(self, xs, gs, etas, losses, pre, set: FeasibleSet, schedule, spec: LossSpec):
        self.xs = _readonly(np.asarray(xs, dtype=np.float64))
        self.gs = _readonly(np.asarray(gs, dtype=np.float64))
        self.etas = _readonly(np.asarray(etas, dtype=np.float64))
        self.losses = _readonly(np.asarray(losses, dtype=np.float64))
        self.pre = _readonly(np.asarray(pre, dtype=np.float64))
        self.set = set
        self.schedule = schedule
        self.spec = spec
        self.final = _readonly(set.project(self.pre[-1]))

    def __len__(self) -> int:
        return self.xs.shape[0]

    @property
    def T(self) -> int:
        return len(self)

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def __getitem__(self, k: int) -> StepRecord:
        return StepRecord(
            t=k + 1,
            x=self.xs[k],
            g=self.gs[k],
            eta=float(self.etas[k]),
            loss=float(self.losses[k]),
            pre_projection=self.pre[k],
        )

    def record(self, t: int) -> StepRecord:
        """Step record for the 1-based time index ``t``."""
        if not 1 <= t <= len(self):
            raise PreconditionError(f"t={t} outside 1..{len(self)}")
        return self[t - 1]

    def next_record(self, t: int) -> StepRecord:
        """Record for ``t + 1``; at the horizon only ``x`` is meaningful."""
        if t < len(self):
            return self.record(t + 1)
        zeros = np.zeros(self.dim)
        return StepRecord(t + 1, self.final, zeros, math.nan, math.nan, self.final)

    @property
    def steps(self) -> list[StepRecord]:
        return [self[k] for k in range(len(self))]

    def __iter__(self) -> Iterator[StepRecord]:
        return (self[k] for k in range(len(self)))

    def points(self) -> np.ndarray:
        """Iterates x_1, ..., x_{T+1}."""
        return np.vstack([self.xs, self.final[None, :]])


def run(
    spec: LossSpec,
    set: FeasibleSet,
    schedule: LearningRateSchedule,
    x0,
    T: int,
) -> Trajectory:
    """Play ``T`` rounds of projected online gradient descent from ``x0``."""
    if T < 1:
        raise PreconditionError("horizon T must be >= 1")
    x = as_point(x0, "x0")
    set.check_dim(x)
    if spec.dim != set.dim:
        raise PreconditionError("loss and set dimensions differ")
    if not set.contains(x, MEMBERSHIP_TOL):
        raise PreconditionError("x0 must lie in the feasible set")

    d = set.dim
    xs = np.empty((T, d))
    gs = np.empty((T, d))
    pre = np.empty((T, d))
    etas = np.empty(T)
    losses = np.empty(T)
    for k in range(T):
        t = k + 1
        # overflow is reported as NumericError below, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            g = spec.gradient(t, x)
            loss = float(spec.value(t, x))
        eta = schedule.rate(t)
        if not (np.all(np.isfinite(g)) and math.isfinite(loss)):
            raise NumericError("non-finite loss or gradient", step=t)
        with np.errstate(over="ignore", invalid="ignore"):
            y = x - eta * g
        if not np.all(np.isfinite(y)):
            raise NumericError("non-finite pre-projection point", step=t)
        xs[k], gs[k], pre[k], etas[k], losses[k] = x, g, y, eta, loss
        x = set.project(y)
    return Trajectory(xs, gs, etas, losses, pre, set, schedule, spec)
