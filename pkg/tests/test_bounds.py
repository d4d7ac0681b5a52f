import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localregret.bounds import (
    BoundConstants,
    BoundPreconditionError,
    check_lemma1,
    check_scenario,
    check_theorem1,
    estimate_constants,
    lemma1_residual,
    scenario1_bound,
    scenario2_bound,
    scenario3_bound,
    theorem1_lower_bound,
    trajectory_diameter,
)
from localregret.exceptions import PreconditionError
from localregret.geometry import AllSpace, Ball, Box
from localregret.losses import DriftingSine, SwitchingQuadratic
from localregret.optimizer import Constant, InverseSqrt, run
from localregret.regret import ConstantW, Growing

QUAD_1D = SwitchingQuadratic(centers=[[0.0]], period=1)
INV = dict(schedule="inverse_sqrt")


def sine(a=0.5, b=2.0, drift=(0.0, 0.0), c0=(0.3, -0.2)):
    return DriftingSine(a=a, b=b, drift=np.array(drift, float), c0=np.array(c0, float))


# ------------------------------------------------------------------ constants


def test_estimate_constants_examples():
    spec = SwitchingQuadratic(centers=[[0.0, 0.0]], period=1)
    c = estimate_constants(run(spec, Ball([0, 0], 2.0), InverseSqrt(0.5), [1.0, 0.0], 5))
    assert (c.M, c.M_source) == (4.0, "set_diameter")
    assert (c.G, c.G_source) == (2.0, "analytic")
    assert c.schedule == "inverse_sqrt" and c.eta == 0.5

    c = estimate_constants(run(QUAD_1D, AllSpace(1), Constant(0.5), [1.0], 3))
    assert (c.M, c.M_source) == (0.75, "trajectory_diameter")
    assert c.G_source == "sampled" and c.G == pytest.approx(1.1, abs=1e-15)


def test_trajectory_diameter_matches_brute_force():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(2500, 3))
    sub = pts[:300]
    brute = max(np.linalg.norm(p - q) for p in sub for q in sub)
    assert trajectory_diameter(sub) == pytest.approx(brute, rel=1e-14)
    assert trajectory_diameter(pts, chunk=128) == pytest.approx(trajectory_diameter(pts), rel=1e-14)


def test_constants_must_be_positive():
    with pytest.raises(PreconditionError):
        BoundConstants(M=0.0, G=1.0, eta=1.0)
    with pytest.raises(PreconditionError):
        BoundConstants(M=1.0, G=math.inf, eta=1.0)


# -------------------------------------------------------------- one-step lemma


def test_lemma_u_zero_gives_penalty_exactly():
    traj = run(sine(), Ball([0, 0], 1.0), InverseSqrt(0.7), [0.1, 0.1], 20)
    G = 3.0
    for t in (1, 7, 20):
        r = lemma1_residual(traj.record(t), traj.next_record(t), traj.set, [0.0, 0.0], G)
        assert r.value == traj.etas[t - 1] ** 2 * G**2


def test_lemma_all_space_residual_is_penalty():
    traj = run(sine(), AllSpace(2), Constant(0.3), [1.0, 1.0], 20)
    rng = np.random.default_rng(1)
    G = 5.0
    for _ in range(50):
        t = int(rng.integers(1, 21))
        r = lemma1_residual(traj.record(t), traj.next_record(t), traj.set, rng.normal(size=2), G)
        assert r.value == pytest.approx(0.09 * 25, rel=1e-9)


def test_lemma_flags_gradient_above_G():
    traj = run(sine(), AllSpace(2), Constant(0.3), [1.0, 1.0], 3)
    r = lemma1_residual(traj.record(1), traj.next_record(1), traj.set, [0.1, 0.0], 1e-3)
    assert r.gradient_exceeds_G


def test_lemma_requires_consecutive_records():
    traj = run(sine(), AllSpace(2), Constant(0.3), [1.0, 1.0], 5)
    with pytest.raises(PreconditionError):
        lemma1_residual(traj.record(1), traj.record(3), traj.set, [0, 0], 1.0)


@pytest.mark.parametrize("schedule", [Constant(0.4), InverseSqrt(1.2)])
@pytest.mark.parametrize(
    "K", [Ball([0.1, 0.0], 1.0), Box([-1.0, -0.5], [0.6, 1.0]), AllSpace(2)], ids=["ball", "box", "all"]
)
def test_lemma_randomized_residuals(schedule, K):
    spec = sine(a=0.8, b=3.0, drift=(0.002, -0.001))
    traj = run(spec, K, schedule, K.project(np.array([0.5, 0.5])), 300)
    c = estimate_constants(traj)
    rows = check_lemma1(traj, c, 1500, np.random.default_rng(2))
    assert len(rows) == 1500
    assert min(r.ratio for r in rows) >= -1e-9
    assert all(r.passed for r in rows)


# --------------------------------------------------------- windowed lower bound


def test_theorem_examples():
    c = BoundConstants(M=2.0, G=1.0, eta=1.0, **INV)
    assert theorem1_lower_bound(c, 4, 2) == pytest.approx(2 * math.sqrt(3) - 16, abs=1e-12)
    assert round(theorem1_lower_bound(c, 4, 2), 4) == -12.5359
    for t in (1, 9, 50):
        assert theorem1_lower_bound(c, t, t) == pytest.approx(2 - 8 * math.sqrt(t), abs=1e-12)


def test_theorem_preconditions():
    c = BoundConstants(M=2.0, G=1.0, eta=1.0, **INV)
    with pytest.raises(PreconditionError):
        theorem1_lower_bound(c, 3, 4)
    with pytest.raises(PreconditionError):
        theorem1_lower_bound(c, 3, 0)
    with pytest.raises(BoundPreconditionError, match="sqrt"):
        theorem1_lower_bound(BoundConstants(2.0, 1.0, 1.0, schedule="constant"), 4, 2)


def test_theorem_monotone_along_w1_and_w_equals_t():
    c = BoundConstants(M=2.0, G=1.0, eta=1.0, **INV)
    w1 = [theorem1_lower_bound(c, t, 1) for t in range(1, 10_001)]
    wt = [theorem1_lower_bound(c, t, t) for t in range(1, 10_001)]
    assert all(b <= a for a, b in zip(w1, w1[1:]))
    assert all(b <= a for a, b in zip(wt, wt[1:]))


def test_theorem_fixed_w_is_not_monotone():
    c = BoundConstants(M=2.0, G=1.0, eta=1.0, **INV)
    assert theorem1_lower_bound(c, 101, 100) > theorem1_lower_bound(c, 100, 100)


def test_check_theorem_small_run():
    K = Ball([0, 0], 1.5)
    traj = run(sine(), K, InverseSqrt(0.5), [0.1, 0.1], 200)
    rows = check_theorem1(traj, estimate_constants(traj), widths=(1, 10, None))
    assert len(rows) == 200 + 191 + 200
    assert all(r.passed for r in rows)


def test_check_theorem_refuses_constant_schedule():
    traj = run(sine(), Ball([0, 0], 1.5), Constant(0.1), [0.1, 0.1], 20)
    with pytest.raises(BoundPreconditionError, match="sqrt"):
        check_theorem1(traj, estimate_constants(traj))


# ------------------------------------------------------------------- scenarios


def test_scenario_examples():
    c1 = BoundConstants(M=1.0, G=1.0, eta=0.5, schedule="constant")
    assert scenario1_bound(c1, 2, 100) == 100.0
    assert scenario1_bound(c1, 4, 100) == 25.0
    assert scenario1_bound(c1, 2, 0) == 0.0

    c = BoundConstants(M=2.0, G=1.0, eta=0.5, **INV)
    assert scenario2_bound(c, 100) == pytest.approx(169 * (1 + math.log(100)), rel=1e-14)
    assert round(scenario2_bound(c, 100), 2) == 947.27
    assert scenario2_bound(c, 1) == 169.0
    assert scenario2_bound(c, 0) == 0.0
    ratio = scenario2_bound(c, 1000**2) / scenario2_bound(c, 1000)
    assert ratio == pytest.approx((1 + 2 * math.log(1000)) / (1 + math.log(1000)), rel=1e-14)
    assert 1.8 < ratio < 2.0

    assert scenario3_bound(c, 10, 100) == pytest.approx(8534.5, rel=1e-14)
    assert scenario3_bound(c, 100, 100) == pytest.approx(85.345, rel=1e-14)
    assert scenario3_bound(c, 1, 1) == 169.0


def test_scenario_schedule_errors():
    const = BoundConstants(M=1.0, G=1.0, eta=0.5, schedule="constant")
    inv = BoundConstants(M=1.0, G=1.0, eta=0.5, **INV)
    with pytest.raises(BoundPreconditionError):
        scenario1_bound(inv, 2, 10)
    with pytest.raises(BoundPreconditionError, match="sqrt"):
        scenario2_bound(const, 10)
    with pytest.raises(BoundPreconditionError, match="sqrt"):
        scenario3_bound(const, 2, 10)


positive = st.floats(0.01, 100)


@settings(max_examples=200, deadline=None)
@given(positive, positive, positive, st.floats(1.0, 10.0), st.integers(1, 1000), st.integers(1, 50))
def test_bounds_monotone_in_M_and_G(M, G, eta, factor, T, w):
    w = min(w, T)
    lo = BoundConstants(M, G, eta)
    for hi in (BoundConstants(M * factor, G, eta), BoundConstants(M, G * factor, eta)):
        assert scenario1_bound(hi, w, T) >= scenario1_bound(lo, w, T)
        assert scenario2_bound(hi, T) >= scenario2_bound(lo, T)
        assert scenario3_bound(hi, w, T) >= scenario3_bound(lo, w, T)
    # the lower bound loosens (moves down) as M grows
    assert theorem1_lower_bound(BoundConstants(M * factor, G, eta), T, w) <= theorem1_lower_bound(lo, T, w)


def test_check_scenario_guards():
    inside = run(sine(), Ball([0, 0], 2.0), InverseSqrt(0.5), [0.1, 0.1], 100)
    with pytest.raises(BoundPreconditionError, match="constant learning rate"):
        check_scenario(inside, 1, ConstantW(5))
    with pytest.raises(BoundPreconditionError, match="growing window"):
        check_scenario(inside, 2, ConstantW(5))
    with pytest.raises(BoundPreconditionError, match="constant window"):
        check_scenario(inside, 3, Growing())
    boundary = run(SwitchingQuadratic(centers=[[3.0, 0.0]]), Ball([0, 0], 1.0), InverseSqrt(0.5), [0.0, 0.0], 50)
    with pytest.raises(BoundPreconditionError, match="interior"):
        check_scenario(boundary, 2, Growing())
    flat = run(sine(), Ball([0, 0], 2.0), Constant(0.1), [0.1, 0.1], 10)
    with pytest.raises(BoundPreconditionError, match="unconstrained"):
        check_scenario(flat, 1, ConstantW(5))


@pytest.mark.parametrize("scenario,window", [(2, Growing()), (3, ConstantW(10))])
def test_check_scenario_envelope_holds(scenario, window):
    traj = run(sine(), Ball([0, 0], 2.0), InverseSqrt(0.5), [0.1, 0.1], 500)
    series, bound, c = check_scenario(traj, scenario, window)
    assert bound.shape == series.cumulative.shape
    assert np.all(series.cumulative <= bound)


def test_check_scenario1_envelope_holds():
    traj = run(sine(), AllSpace(2), Constant(0.1), [1.0, 1.0], 1000)
    series, bound, c = check_scenario(traj, 1, ConstantW(20))
    assert c.M_source == "trajectory_diameter"
    assert np.all(series.cumulative <= bound)
