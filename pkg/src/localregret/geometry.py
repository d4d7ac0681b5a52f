"""Convex feasible sets with closed-form Euclidean projections.

Three variants are supported: the whole space, a Euclidean ball and an
axis-aligned box. Every operation accepts a single point of shape ``(d,)``
or a batch of points of shape ``(n, d)``; the last axis is always the
coordinate axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, PreconditionError

# Absolute tolerance on constraint violation for membership and interiority.
MEMBERSHIP_TOL = 1e-9


def as_point(x, name: str = "x") -> np.ndarray:
    """Coerce ``x`` to a finite float64 vector (or batch of vectors)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} has non-finite coordinates")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


class FeasibleSet:
    """Common interface of the convex domains."""

    dim: int

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def violation(self, x: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Largest amount by which the ``margin``-ball around ``x`` leaves the set."""
        raise NotImplementedError

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.diameter())

    def check_dim(self, x: np.ndarray) -> None:
        if x.shape[-1] != self.dim:
            raise DimensionError(
                f"point has dimension {x.shape[-1]}, set has dimension {self.dim}"
            )

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> np.ndarray | bool:
        x = as_point(x)
        self.check_dim(x)
        out = self.violation(x) <= tol
        return bool(out) if np.ndim(out) == 0 else out

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` points uniformly from the set (bounded sets only)."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class AllSpace(FeasibleSet):
    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise PreconditionError("AllSpace dimension must be >= 1")

    def project(self, x):
        return np.array(x, dtype=np.float64)

    def diameter(self):
        return math.inf

    def violation(self, x, margin=0.0):
        return np.zeros(x.shape[:-1]) if x.ndim > 1 else np.float64(0.0)

    def bounding_box(self):
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)

    def sample(self, rng, n):
        raise PreconditionError("cannot sample uniformly from an unbounded set")


@dataclass(frozen=True, eq=False)
class Ball(FeasibleSet):
    center: np.ndarray
    radius: float
    dim: int = field(init=False)

    def __post_init__(self):
        center = _frozen(as_point(self.center, "center"))
        if center.ndim != 1:
            raise PreconditionError("ball center must be a single point")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise PreconditionError("ball radius must be positive and finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "dim", center.shape[0])

    def project(self, x):
        offset = x - self.center
        norm = np.linalg.norm(offset, axis=-1, keepdims=True)
        # Points already within rounding of the sphere are left untouched so
        # that projection is exactly idempotent.
        slack = 16.0 * np.finfo(float).eps * (self.radius + float(np.max(np.abs(self.center))))
        outside = norm > self.radius + slack
        scale = np.where(outside, self.radius / np.maximum(norm, 1e-300), 1.0)
        out = np.where(outside, self.center + offset * scale, x)
        return np.array(out, dtype=np.float64)

    def diameter(self):
        return 2.0 * self.radius

    def violation(self, x, margin=0.0):
        return np.linalg.norm(x - self.center, axis=-1) + margin - self.radius

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def sample(self, rng, n):
        direction = rng.standard_normal((n, self.dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        r = self.radius * rng.random(n) ** (1.0 / self.dim)
        return self.center + direction * r[:, None]


@dataclass(frozen=True, eq=False)
class Box(FeasibleSet):
    lower: np.ndarray
    upper: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        lower = _frozen(as_point(self.lower, "lower"))
        upper = _frozen(as_point(self.upper, "upper"))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DimensionError("box bounds must be vectors of equal length")
        if not np.all(lower < upper):
            raise PreconditionError("box requires lower < upper in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "dim", lower.shape[0])

    def project(self, x):
        return np.clip(x, self.lower, self.upper)

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def violation(self, x, margin=0.0):
        below = self.lower - (x - margin)
        above = (x + margin) - self.upper
        return np.max(np.maximum(below, above), axis=-1)

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def sample(self, rng, n):
        return self.lower + (self.upper - self.lower) * rng.random((n, self.dim))


def project(set: FeasibleSet, x) -> np.ndarray:
    """Euclidean nearest point of ``set`` to ``x``."""
    x = as_point(x)
    set.check_dim(x)
    return set.project(x)


def displacement(set: FeasibleSet, x, u, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """Feasible perturbation ``proj(x + u) - x`` induced by direction ``u``.

    ``x`` must lie in ``set`` (up to ``tol``). ``x`` and ``u`` broadcast, so a
    batch of iterates can be displaced by one direction in a single call.
    """
    x = as_point(x)
    u = as_point(u, "u")
    set.check_dim(x)
    set.check_dim(u)
    if np.any(set.violation(x) > tol):
        raise PreconditionError("displacement requires x inside the feasible set")
    return set.project(x + u) - x


def diameter(set: FeasibleSet) -> float:
    """Largest distance between two points of ``set``; ``math.inf`` if unbounded."""
    return set.diameter()


def is_interior(set: FeasibleSet, x, margin: float = 0.0) -> np.ndarray | bool:
    """Whether the closed ball of radius ``margin`` around ``x`` lies in ``set``."""
    if margin < 0:
        raise PreconditionError("margin must be nonnegative")
    x = as_point(x)
    set.check_dim(x)
    out = set.violation(x, margin) <= MEMBERSHIP_TOL
    return bool(out) if np.ndim(out) == 0 else out
