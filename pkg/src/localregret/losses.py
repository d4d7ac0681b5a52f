"""Time-varying loss families with analytic gradients.

``DriftingSine`` is a quadratic bowl around a moving center plus a separable
sine ripple; it is nonconvex once ``|a| * b**2 > 1``. ``SwitchingQuadratic``
cycles through a list of centers. ``ScriptedOracle`` wraps user callbacks and
is meant for hand-built fixtures.

Loss methods take a 1-based time index ``t`` and points with coordinates on
the last axis, so a batch of points is evaluated in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import DimensionError, PreconditionError
from .geometry import AllSpace, Ball, Box, FeasibleSet, as_point

# Safety factor applied to sampled gradient-norm maxima.
SAMPLED_INFLATION = 1.1
DEFAULT_SAMPLES = 10_000
DEFAULT_FD_STEP = 1e-5


class LossSpec:
    """Indexed family of losses f_1, f_2, ... on R^d."""

    dim: int
    convex: bool = False

    def value(self, t: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, t: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def nonconvex(self) -> bool:
        return not self.convex


@dataclass(frozen=True, eq=False)
class DriftingSine(LossSpec):
    """f_t(x) = 0.5 * ||x - c_t||^2 + a * sum_i sin(b * x_i), c_t = c0 + t * drift."""

    a: float
    b: float
    drift: np.ndarray
    c0: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        drift = as_point(self.drift, "drift")
        c0 = as_point(self.c0, "c0")
        if drift.shape != c0.shape:
            raise DimensionError("drift and c0 must have the same dimension")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise PreconditionError("a and b must be finite")
        drift.flags.writeable = False
        c0.flags.writeable = False
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "dim", c0.shape[0])

    @property
    def convex(self) -> bool:
        # Hessian is I - a*b^2*diag(sin(b*x_i)); its smallest eigenvalue over
        # R^d is 1 - |a|*b^2.
        return abs(self.a) * self.b**2 <= 1.0

    def center(self, t: int) -> np.ndarray:
        return self.c0 + t * self.drift

    def value(self, t, x):
        diff = x - self.center(t)
        return 0.5 * np.sum(diff * diff, axis=-1) + self.a * np.sum(
            np.sin(self.b * x), axis=-1
        )

    def gradient(self, t, x):
        return (x - self.center(t)) + self.a * self.b * np.cos(self.b * x)


@dataclass(frozen=True, eq=False)
class SwitchingQuadratic(LossSpec):
    """f_t(x) = 0.5 * ||x - centers[(t // period) % len(centers)]||^2."""

    centers: np.ndarray
    period: int = 1
    dim: int = field(init=False)
    convex = True

    def __post_init__(self):
        centers = np.atleast_2d(as_point(self.centers, "centers"))
        if centers.shape[0] == 0:
            raise PreconditionError("at least one center is required")
        if int(self.period) != self.period or self.period < 1:
            raise PreconditionError("period must be a positive integer")
        centers.flags.writeable = False
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "period", int(self.period))
        object.__setattr__(self, "dim", centers.shape[1])

    def center_index(self, t: int) -> int:
        return (t // self.period) % len(self.centers)

    def center(self, t: int) -> np.ndarray:
        return self.centers[self.center_index(t)]

    def value(self, t, x):
        diff = x - self.center(t)
        return 0.5 * np.sum(diff * diff, axis=-1)

    def gradient(self, t, x):
        return x - self.center(t)


@dataclass(frozen=True, eq=False)
class ScriptedOracle(LossSpec):
    """Loss defined by callbacks ``value_fn(t, x)`` and ``gradient_fn(t, x)``.

    Callbacks receive a single point of shape ``(d,)``; batches are looped.
    """

    dim: int
    value_fn: Callable[[int, np.ndarray], float]
    gradient_fn: Callable[[int, np.ndarray], Sequence[float]]
    convex: bool = False

    def value(self, t, x):
        if x.ndim == 1:
            return np.float64(self.value_fn(t, x))
        flat = x.reshape(-1, self.dim)
        out = np.array([self.value_fn(t, p) for p in flat], dtype=np.float64)
        return out.reshape(x.shape[:-1])

    def gradient(self, t, x):
        if x.ndim == 1:
            return np.asarray(self.gradient_fn(t, x), dtype=np.float64).reshape(self.dim)
        flat = x.reshape(-1, self.dim)
        out = np.array([self.gradient_fn(t, p) for p in flat], dtype=np.float64)
        return out.reshape(x.shape)


def _checked(spec: LossSpec, t, x) -> np.ndarray:
    if int(t) != t or t < 1:
        raise PreconditionError(f"loss index t must be a positive integer, got {t}")
    x = as_point(x)
    if x.shape[-1] != spec.dim:
        raise DimensionError(f"point has dimension {x.shape[-1]}, loss has {spec.dim}")
    return x


def loss_value(spec: LossSpec, t: int, x) -> float | np.ndarray:
    x = _checked(spec, t, x)
    out = spec.value(int(t), x)
    return float(out) if np.ndim(out) == 0 else out


def loss_gradient(spec: LossSpec, t: int, x) -> np.ndarray:
    x = _checked(spec, t, x)
    return spec.gradient(int(t), x)


def finite_difference_gradient(
    spec: LossSpec, t: int, x, h: float = DEFAULT_FD_STEP
) -> np.ndarray:
    """Central-difference gradient, one coordinate at a time."""
    if not h > 0:
        raise PreconditionError("finite-difference step must be positive")
    x = _checked(spec, t, x)
    if x.ndim != 1:
        raise PreconditionError("finite differences take a single point")
    grad = np.empty(spec.dim)
    e = np.zeros(spec.dim)
    for i in range(spec.dim):
        e[i] = h
        grad[i] = (spec.value(int(t), x + e) - spec.value(int(t), x - e)) / (2.0 * h)
        e[i] = 0.0
    return grad


def finite_difference_hessian(spec: LossSpec, t: int, x, h: float = 1e-4) -> np.ndarray:
    """Symmetrized central-difference Jacobian of the analytic gradient."""
    x = _checked(spec, t, x)
    hess = np.empty((spec.dim, spec.dim))
    e = np.zeros(spec.dim)
    for i in range(spec.dim):
        e[i] = h
        hess[:, i] = (spec.gradient(int(t), x + e) - spec.gradient(int(t), x - e)) / (2.0 * h)
        e[i] = 0.0
    return 0.5 * (hess + hess.T)


@dataclass(frozen=True)
class GradientBound:
    G: float
    method: str  # "analytic" or "sampled"
    sample_count: int = 0


def _sup_distance(set: FeasibleSet, c: np.ndarray) -> float:
    """sup over x in ``set`` of ||x - c||."""
    if isinstance(set, Ball):
        return float(np.linalg.norm(set.center - c)) + set.radius
    if isinstance(set, Box):
        far = np.maximum(np.abs(set.lower - c), np.abs(set.upper - c))
        return float(np.linalg.norm(far))
    return math.inf


def gradient_bound(
    spec: LossSpec,
    set: FeasibleSet,
    horizon: int,
    method: str | None = None,
    samples: int = DEFAULT_SAMPLES,
    rng: np.random.Generator | None = None,
) -> GradientBound:
    """Bound G on ||grad f_t(x)|| over x in ``set`` and 1 <= t <= ``horizon``.

    The quadratic families get a closed-form triangle-inequality bound.
    Other losses (or ``method="sampled"``) use the maximum over uniform draws
    inflated by ``SAMPLED_INFLATION``.
    """
    if horizon < 1:
        raise PreconditionError("horizon must be >= 1")
    if spec.dim != set.dim:
        raise DimensionError("loss and set dimensions differ")
    if isinstance(set, AllSpace):
        raise PreconditionError("unbounded gradient: loss gradients grow without bound on all of R^d")
    if method is None:
        method = "analytic" if isinstance(spec, (DriftingSine, SwitchingQuadratic)) else "sampled"

    if method == "analytic":
        if isinstance(spec, DriftingSine):
            # ||x - c_t|| is convex in t, so its max over [1, horizon] sits at an end.
            dist = max(_sup_distance(set, spec.center(1)), _sup_distance(set, spec.center(horizon)))
            ripple = abs(spec.a) * abs(spec.b) * math.sqrt(spec.dim)
            return GradientBound(dist + ripple, "analytic")
        if isinstance(spec, SwitchingQuadratic):
            cycle = spec.period * len(spec.centers)
            used = {spec.center_index(t) for t in range(1, min(horizon, cycle) + 1)}
            dist = max(_sup_distance(set, spec.centers[i]) for i in used)
            return GradientBound(dist, "analytic")
        raise PreconditionError(f"no analytic gradient bound for {type(spec).__name__}")

    if method != "sampled":
        raise PreconditionError(f"unknown gradient-bound method {method!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    points = set.sample(rng, samples)
    times = rng.integers(1, horizon + 1, size=samples)
    sup = 0.0
    for t in np.unique(times):
        grads = spec.gradient(int(t), points[times == t])
        sup = max(sup, float(np.max(np.linalg.norm(grads, axis=-1))))
    return GradientBound(SAMPLED_INFLATION * sup, "sampled", samples)
