"""Regret bounds for projected online gradient descent and their empirical checks.

Every bound is a function of ``BoundConstants``: the diameter ``M``, the
gradient-norm bound ``G`` and the base learning rate ``eta``. Formula
functions are pure; the ``check_*`` helpers evaluate them against a
recorded trajectory and enforce each result's assumptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import PreconditionError
from .geometry import AllSpace, as_point, is_interior
from .losses import SAMPLED_INFLATION, LossSpec, gradient_bound
from .optimizer import StepRecord, Trajectory
from .regret import INTERIOR_MARGIN, ConstantW, Growing, WindowSpec, proposed_regret_interior

# Inequality checks pass when residual >= -RESIDUAL_TOL * scale.
RESIDUAL_TOL = 1e-9


class BoundPreconditionError(PreconditionError):
    """A bound was requested for a run that violates one of its assumptions."""


@dataclass(frozen=True)
class BoundConstants:
    M: float
    G: float
    eta: float
    M_source: str = "set_diameter"  # or "trajectory_diameter"
    G_source: str = "analytic"  # or "sampled"
    schedule: str | None = None  # "constant" / "inverse_sqrt"; None skips schedule checks

    def __post_init__(self):
        for name in ("M", "G", "eta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise PreconditionError(f"{name} must be positive and finite, got {value}")


def trajectory_diameter(points: np.ndarray, chunk: int = 1024) -> float:
    """Largest pairwise Euclidean distance among the rows of ``points``."""
    points = np.asarray(points, dtype=np.float64)
    best = 0.0
    sq = np.sum(points * points, axis=1)
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        d2 = sq[start : start + chunk, None] + sq[None, :] - 2.0 * block @ points.T
        k = np.unravel_index(np.argmax(d2), d2.shape)
        # Recompute the winning pair directly; the expanded form loses digits.
        best = max(best, float(np.linalg.norm(block[k[0]] - points[k[1]])))
    return best


def estimate_constants(
    traj: Trajectory,
    spec: LossSpec | None = None,
    horizon: int | None = None,
    rng: np.random.Generator | None = None,
) -> BoundConstants:
    """Constants (M, G, eta) for a completed run.

    On a bounded set M is the set diameter and G comes from
    ``gradient_bound``. On all of R^d both fall back to the run itself: M is the
    diameter of x_1..x_T and G is the largest observed gradient norm,
    inflated by 10%.
    """
    spec = traj.spec if spec is None else spec
    horizon = len(traj) if horizon is None else horizon
    if traj.set.bounded:
        M, M_source = traj.set.diameter(), "set_diameter"
        gb = gradient_bound(spec, traj.set, horizon, rng=rng)
        G, G_source = gb.G, gb.method
    else:
        M, M_source = trajectory_diameter(traj.xs), "trajectory_diameter"
        G = SAMPLED_INFLATION * float(np.max(np.linalg.norm(traj.gs, axis=1)))
        G_source = "sampled"
    # Degenerate (stationary) runs still need strictly positive constants.
    M = M if M > 0 else 1e-300
    G = G if G > 0 else 1e-300
    return BoundConstants(M, G, traj.schedule.eta, M_source, G_source, traj.schedule.kind)


def _scenario_constant(c: BoundConstants) -> float:
    return 3.0 * c.M**2 / (2.0 * c.eta) + 2.0 * c.eta * c.G**2


def _require_schedule(c: BoundConstants, kind: str, what: str) -> None:
    if c.schedule is not None and c.schedule != kind:
        need = "eta_t = eta / sqrt(t)" if kind == "inverse_sqrt" else "constant eta_t = eta"
        raise BoundPreconditionError(f"{what} requires the {kind} schedule ({need})")


@dataclass(frozen=True)
class LemmaResidual:
    value: float  # lhs - rhs; the inequality claims >= 0
    lhs: float
    rhs: float
    scale: float
    gradient_exceeds_G: bool

    @property
    def normalized(self) -> float:
        return self.value / self.scale

    @property
    def passed(self) -> bool:
        return self.normalized >= -RESIDUAL_TOL


def lemma1_residual(
    record: StepRecord, next: StepRecord, set, u, G: float
) -> LemmaResidual:
    """Slack in the one-step inequality

        eta_t <D_u(x_t), g_t> >= <u_t - u_{t+1}, u>
            + (||u_{t+1} - x_{t+1}||^2 - ||u_t - x_t||^2) / 2 - eta_t^2 G^2

    with u_t = proj(x_t + u). Uses the recorded eta_t.
    """
    if next.t != record.t + 1:
        raise PreconditionError("records must be consecutive steps")
    u = as_point(u, "u")
    x_t, x_n, g, eta = record.x, next.x, record.g, record.eta
    u_t = set.project(x_t + u)
    u_n = set.project(x_n + u)
    lhs = eta * float((u_t - x_t) @ g)
    drift = float((u_t - u_n) @ u)
    a = float((u_n - x_n) @ (u_n - x_n))
    b = float((u_t - x_t) @ (u_t - x_t))
    penalty = eta * eta * G * G
    rhs = drift + 0.5 * (a - b) - penalty
    scale = max(1.0, abs(lhs), abs(drift), 0.5 * a, 0.5 * b, penalty)
    exceeds = float(np.linalg.norm(g)) > G * (1 + 1e-12)
    return LemmaResidual(lhs - rhs, lhs, rhs, scale, exceeds)


def theorem1_lower_bound(c: BoundConstants, t: int, w: int) -> float:
    """Lower bound on sum_{s=t-w+1}^{t} <D_u(x_s), g_s> under eta_s = eta/sqrt(s)."""
    _require_schedule(c, "inverse_sqrt", "the windowed lower bound")
    if not 1 <= w <= t:
        raise PreconditionError("need 1 <= w <= t")
    return 2.0 * c.eta * c.G**2 * math.sqrt(t - w + 1) - _scenario_constant(c) * math.sqrt(t)


def scenario1_bound(c: BoundConstants, w: int, T: int) -> float:
    """M^2 T / (w^2 eta^2): constant step, constant window, unconstrained."""
    _require_schedule(c, "constant", "scenario 1")
    return c.M**2 * T / (w**2 * c.eta**2)


def scenario2_bound(c: BoundConstants, T: int) -> float:
    """C^2 (1 + ln T) with C = 3M^2/(2 eta) + 2 eta G^2: growing window."""
    _require_schedule(c, "inverse_sqrt", "scenario 2")
    if T < 1:
        return 0.0
    return _scenario_constant(c) ** 2 * (1.0 + math.log(T))


def scenario3_bound(c: BoundConstants, w: int, T: int) -> float:
    """C^2 T (T + 1) / (2 w^2): inverse-sqrt step, constant window."""
    _require_schedule(c, "inverse_sqrt", "scenario 3")
    return _scenario_constant(c) ** 2 * T * (T + 1) / (2.0 * w**2)


# ---------------------------------------------------------------------------
# Empirical checks over trajectories


@dataclass(frozen=True)
class BoundRow:
    t: int
    w: int
    empirical: float
    bound: float
    ratio: float
    passed: bool


def lemma1_draws(
    traj: Trajectory, n_draws: int, rng: np.random.Generator, G: float
) -> list[tuple[int, int, LemmaResidual]]:
    """Residuals at ``n_draws`` random (step, u) pairs with x_t + u in the set.

    On bounded sets u = z - x_t for z uniform in the set; on all of R^d, u is
    Gaussian with the trajectory's spread as scale.
    """
    T = len(traj)
    steps = rng.integers(1, T + 1, size=n_draws)
    if traj.set.bounded:
        targets = traj.set.sample(rng, n_draws)
        us = targets - traj.xs[steps - 1]
    else:
        spread = max(1.0, trajectory_diameter(traj.points()))
        us = spread * rng.standard_normal((n_draws, traj.dim))
    out = []
    for k, (t, u) in enumerate(zip(steps.tolist(), us)):
        out.append((t, k, lemma1_residual(traj.record(t), traj.next_record(t), traj.set, u, G)))
    return out


def check_lemma1(
    traj: Trajectory, c: BoundConstants, n_draws: int, rng: np.random.Generator
) -> list[BoundRow]:
    rows = []
    for t, k, r in lemma1_draws(traj, n_draws, rng, c.G):
        rows.append(BoundRow(t, k, r.lhs, r.rhs, r.normalized, r.passed))
    return rows


def window_inner_sum(traj: Trajectory, t: int, w: int) -> tuple[float, float, np.ndarray]:
    """sum_{s=t-w+1}^{t} <D_u(x_s), g_s> with u the negative normalized window gradient sum.

    Returns ``(value, scale, u)`` where ``scale`` is the sum of absolute terms.
    """
    start = t - w
    xs, gs = traj.xs[start:t], traj.gs[start:t]
    total = gs.sum(axis=0)
    norm = float(np.linalg.norm(total))
    if norm > 0:
        u = -total / norm
    else:
        u = np.zeros(traj.dim)
        u[0] = 1.0
    disp = traj.set.project(xs + u) - xs
    terms = np.sum(disp * gs, axis=1)
    return float(np.sum(terms)), float(np.sum(np.abs(terms))), u


def check_theorem1(
    traj: Trajectory, c: BoundConstants, widths=(1, 10, 100, None), t_values=None
) -> list[BoundRow]:
    """Lower-bound rows over a (t, w) lattice; ``None`` in ``widths`` means w = t."""
    if traj.schedule.kind != "inverse_sqrt":
        raise BoundPreconditionError(
            "the windowed lower bound requires the inverse_sqrt schedule (eta_t = eta / sqrt(t))"
        )
    T = len(traj)
    t_values = range(1, T + 1) if t_values is None else t_values
    rows = []
    for w_spec in widths:
        for t in t_values:
            w = t if w_spec is None else w_spec
            if w > t:
                continue
            empirical, spread, _ = window_inner_sum(traj, t, w)
            bound = theorem1_lower_bound(c, t, w)
            scale = max(1.0, spread, abs(bound))
            slack = (empirical - bound) / scale
            rows.append(BoundRow(t, w, empirical, bound, slack, slack >= -RESIDUAL_TOL))
    return rows


def _scenario_guard(traj: Trajectory, scenario: int, window: WindowSpec) -> None:
    kind = traj.schedule.kind
    if scenario == 1:
        if kind != "constant":
            raise BoundPreconditionError("scenario 1 requires a constant learning rate eta_t = eta")
        if not isinstance(window, ConstantW):
            raise BoundPreconditionError("scenario 1 requires a constant window width w")
        if not isinstance(traj.set, AllSpace):
            raise BoundPreconditionError("scenario 1 requires the unconstrained set K = R^d")
    elif scenario in (2, 3):
        if kind != "inverse_sqrt":
            raise BoundPreconditionError(
                f"scenario {scenario} requires the inverse-sqrt schedule eta_t = eta / sqrt(t)"
            )
        if scenario == 2 and not isinstance(window, Growing):
            raise BoundPreconditionError("scenario 2 requires the growing window w = t")
        if scenario == 3 and not isinstance(window, ConstantW):
            raise BoundPreconditionError("scenario 3 requires a constant window width w")
        if not np.all(np.atleast_1d(is_interior(traj.set, traj.xs, INTERIOR_MARGIN))):
            raise BoundPreconditionError(f"scenario {scenario} requires every iterate to be interior")
    else:
        raise PreconditionError(f"unknown scenario {scenario}")


def scenario_bound_values(c: BoundConstants, scenario: int, window: WindowSpec, T: int) -> np.ndarray:
    """Bound value at every horizon 1..T."""
    horizons = range(1, T + 1)
    if scenario == 1:
        return np.array([scenario1_bound(c, window.w, n) for n in horizons])
    if scenario == 2:
        return np.array([scenario2_bound(c, n) for n in horizons])
    if scenario == 3:
        return np.array([scenario3_bound(c, window.w, n) for n in horizons])
    raise PreconditionError(f"unknown scenario {scenario}")


def check_scenario(
    traj: Trajectory, scenario: int, window: WindowSpec, c: BoundConstants | None = None
):
    """Measured proposed regret against a scenario's envelope at every horizon.

    Returns ``(series, bound_values, constants)``.
    """
    _scenario_guard(traj, scenario, window)
    c = estimate_constants(traj) if c is None else c
    series = proposed_regret_interior(traj, window)
    return series, scenario_bound_values(c, scenario, window, len(traj)), c
