import math

import numpy as np
import pytest

from localregret.exceptions import NumericError, PreconditionError
from localregret.geometry import AllSpace, Ball, Box
from localregret.losses import DriftingSine, SwitchingQuadratic
from localregret.optimizer import Constant, InverseSqrt, run, step

QUAD_1D = SwitchingQuadratic(centers=[[0.0]], period=1)


def test_step_examples():
    nxt, pre = step(AllSpace(1), [1.0], [1.0], 0.5)
    assert nxt.tolist() == [0.5] and pre.tolist() == [0.5]
    nxt, pre = step(Ball([0, 0], 1.0), [1, 0], [-2, 0], 1.0)
    assert pre.tolist() == [3, 0] and nxt.tolist() == [1, 0]
    for K, x in ((AllSpace(2), [3, 4]), (Box([0, 0], [1, 1]), [0.2, 1.0])):
        nxt, _ = step(K, x, [0, 0], 0.7)
        assert nxt.tolist() == x


def test_step_rejects_non_finite_gradient():
    with pytest.raises(NumericError):
        step(AllSpace(1), [0.0], [math.nan], 0.1)


def test_schedules():
    assert InverseSqrt(2.0).rate(1) == 2.0
    assert InverseSqrt(2.0).rate(4) == 1.0
    assert Constant(0.3).rate(100) == 0.3
    rates = [InverseSqrt(1.0).rate(t) for t in range(1, 50)]
    assert all(a > b > 0 for a, b in zip(rates, rates[1:]))
    with pytest.raises(PreconditionError):
        Constant(0.0)


def test_run_hand_iteration():
    traj = run(QUAD_1D, AllSpace(1), Constant(0.5), [1.0], 3)
    assert traj.xs[:, 0].tolist() == [1.0, 0.5, 0.25]
    assert traj.gs[:, 0].tolist() == [1.0, 0.5, 0.25]
    assert [s.t for s in traj.steps] == [1, 2, 3]
    assert traj.final.tolist() == [0.125]


def test_run_inverse_sqrt_jumps_to_minimizer():
    traj = run(QUAD_1D, AllSpace(1), InverseSqrt(1.0), [1.0], 2)
    assert traj.xs[1, 0] == 0.0
    assert traj.final[0] == 0.0


def test_run_at_common_stationary_point_is_constant():
    spec = SwitchingQuadratic(centers=[[0.3, -0.1]], period=1)
    traj = run(spec, Ball([0, 0], 1.0), InverseSqrt(0.8), [0.3, -0.1], 20)
    assert np.all(traj.xs == traj.xs[0])
    assert np.all(traj.gs == 0)


def test_run_rejects_infeasible_start():
    with pytest.raises(PreconditionError):
        run(QUAD_1D, Box([-1], [1]), Constant(0.1), [2.0], 5)


def test_numeric_failure_carries_step():
    # x <- x - 3x = -2x, so x_t = (-2)^(t-1) and x^2/2 overflows once |x| > 2^512
    with pytest.raises(NumericError) as info:
        run(QUAD_1D, AllSpace(1), Constant(3.0), [1.0], 2000)
    assert info.value.step in (513, 514)


@pytest.fixture(params=["ball", "box", "all"])
def nonconvex_run(request):
    spec = DriftingSine(a=0.7, b=2.5, drift=np.array([0.004, -0.003]), c0=np.array([0.5, 0.2]))
    K = {"ball": Ball([0, 0], 1.0), "box": Box([-1, -0.5], [0.8, 1.0]), "all": AllSpace(2)}[request.param]
    return lambda: run(spec, K, InverseSqrt(0.9), [0.1, 0.1], 400)


def test_feasibility_replay_and_pre_projection(nonconvex_run):
    a, b = nonconvex_run(), nonconvex_run()
    assert np.all(a.set.contains(a.xs))
    for name in ("xs", "gs", "etas", "losses", "pre"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    for k in range(len(a) - 1):
        assert np.array_equal(a.set.project(a.pre[k]), a.xs[k + 1])


def test_trajectory_is_read_only(nonconvex_run):
    traj = nonconvex_run()
    with pytest.raises(ValueError):
        traj.xs[0, 0] = 5.0


@pytest.mark.parametrize("eta", [0.1, 1.0, 2.0])
def test_convex_distance_to_center_non_increasing(eta):
    center = np.array([0.4, -0.3])
    spec = SwitchingQuadratic(centers=[center], period=1)
    for K in (AllSpace(2), Ball([0, 0], 1.0), Box([-1, -1], [1, 1])):
        traj = run(spec, K, InverseSqrt(eta), K.project(np.array([0.9, 0.9])), 300)
        dist = np.linalg.norm(traj.xs - center, axis=1)
        assert np.all(np.diff(dist[1:]) <= 1e-15)
