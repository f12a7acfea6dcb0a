import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustqp.kinematics import (
    BarrierState,
    CartesianTask,
    HalfPlaneBarrier,
    JointPositionBarrier,
    JointTask,
    JointVelocityBarrier,
    PlanarChain,
    TaskReference,
    barrier_state,
    fk,
    jacobian,
    jacobian_dot,
    task_state,
)

UNIT = PlanarChain((1.0, 1.0))
angles = st.floats(-math.pi, math.pi, allow_nan=False)


@pytest.mark.parametrize(
    "q, xy", [((0.0, 0.0), (2.0, 0.0)), ((math.pi / 2, 0.0), (0.0, 2.0)), ((math.pi / 2, -math.pi / 2), (1.0, 1.0))]
)
def test_fk_examples(q, xy):
    np.testing.assert_allclose(fk(UNIT, q), xy, atol=1e-15)


def test_jacobian_example():
    np.testing.assert_allclose(jacobian(UNIT, (0.0, 0.0)), [[0.0, 0.0], [2.0, 1.0]], atol=1e-15)


@settings(max_examples=50)
@given(st.lists(angles, min_size=3, max_size=3))
def test_jacobian_annihilates_zero_velocity(q):
    chain = PlanarChain((0.5, 0.4, 0.3))
    np.testing.assert_array_equal(jacobian(chain, q) @ np.zeros(3), np.zeros(2))
    np.testing.assert_array_equal(jacobian_dot(chain, q, np.zeros(3)), np.zeros((2, 3)))


def test_analytic_jacobian_formula():
    q = np.array([0.3, -1.1])
    l1, l2 = 0.7, 0.4
    s1, c1 = math.sin(q[0]), math.cos(q[0])
    s12, c12 = math.sin(q.sum()), math.cos(q.sum())
    expected = [[-l1 * s1 - l2 * s12, -l2 * s12], [l1 * c1 + l2 * c12, l2 * c12]]
    np.testing.assert_allclose(jacobian(PlanarChain((l1, l2)), q), expected, atol=1e-15)


def test_second_derivative_identity():
    chain = PlanarChain((0.5, 0.5, 0.2))
    q, qd, qdd = np.array([0.2, 0.7, -0.4]), np.array([0.5, -1.0, 0.8]), np.array([0.3, 0.1, -0.2])
    h = 1e-4

    def pos(t):
        return fk(chain, q + qd * t + 0.5 * qdd * t * t)

    fd = (pos(h) - 2 * pos(0.0) + pos(-h)) / (h * h)
    analytic = jacobian_dot(chain, q, qd) @ qd + jacobian(chain, q) @ qdd
    np.testing.assert_allclose(fd, analytic, atol=1e-6)


def test_joint_task_identity():
    task = JointTask(1)
    np.testing.assert_array_equal(task.jacobian([0.3]), [[1.0]])
    np.testing.assert_array_equal(task.jacobian_dot([0.3], [4.0]), [[0.0]])


def test_task_state_examples():
    ts = task_state(JointTask(1), TaskReference([1.0]), [0.5], [0.0])
    np.testing.assert_allclose(ts.e, [-0.5])
    np.testing.assert_allclose(ts.e_dot, [0.0])

    with pytest.warns(RuntimeWarning):  # stretched chain is singular
        ts = task_state(CartesianTask(UNIT), TaskReference([2.0, 0.0]), [0.0, 0.0], [1.0, 0.0])
    np.testing.assert_allclose(ts.e, [0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(ts.e_dot, [0.0, 2.0], atol=1e-15)

    q = [0.4, -0.2]
    on_ref = task_state(CartesianTask(UNIT), TaskReference(fk(UNIT, q)), q, [0.0, 0.0])
    np.testing.assert_allclose(on_ref.e, 0.0, atol=1e-15)


def test_barrier_state_examples():
    b = JointPositionBarrier(1, 0, 3.0, upper=True)
    bs = barrier_state(b, [2.5], [0.1])
    assert bs.h == pytest.approx(0.5) and bs.h_dot == pytest.approx(-0.1)

    hp = HalfPlaneBarrier(UNIT, (-1.0, 0.0), 1.5)
    q = (math.pi / 2, -math.pi / 2)  # end effector at (1, 1)
    assert barrier_state(hp, q, (0.0, 0.0)).h == pytest.approx(0.5)


def test_barrier_state_lower_and_velocity():
    lo = JointPositionBarrier(2, 1, -1.0, upper=False)
    bs = barrier_state(lo, [0.0, -0.5], [0.0, 0.2])
    assert bs.h == pytest.approx(0.5) and bs.h_dot == pytest.approx(0.2)

    vb = JointVelocityBarrier(1, 0, 2.0, upper=True)
    assert barrier_state(vb, [0.0], [1.5]).h == pytest.approx(0.5)


def test_barrier_state_rejects_unknown_form():
    with pytest.raises(TypeError):
        barrier_state(object(), [0.0], [0.0])


def test_desired_and_actual_barriers_coincide_without_error():
    hp = HalfPlaneBarrier(UNIT, (0.0, 1.0), 0.3)
    q, qd = np.array([0.2, 0.9]), np.array([0.1, -0.3])
    a = barrier_state(hp, q, qd)
    b = barrier_state(hp, q.copy(), qd.copy())
    assert isinstance(a, BarrierState)
    assert (a.h, a.h_dot) == (b.h, b.h_dot)


def test_taylor_remainder_is_second_order():
    """eta(x) - eta(x_d) - d(eta)/dx|_{x_d} phi shrinks quadratically with phi."""
    chain = PlanarChain((0.5, 0.5))
    q_d, qd_d = np.array([0.3, 1.2]), np.array([0.4, -0.2])
    dq, dqd = np.array([0.7, -0.4]), np.array([-0.5, 0.9])

    def eta(q, qd):
        return np.concatenate([fk(chain, q), jacobian(chain, q) @ qd])

    def linear(dq, dqd):
        return np.concatenate([
            jacobian(chain, q_d) @ dq,
            jacobian_dot(chain, q_d, dq) @ qd_d + jacobian(chain, q_d) @ dqd,
        ])

    rem = []
    for s in (1e-2, 5e-3):
        r = eta(q_d + s * dq, qd_d + s * dqd) - eta(q_d, qd_d) - linear(s * dq, s * dqd)
        rem.append(np.linalg.norm(r))
    assert rem[0] / rem[1] == pytest.approx(4.0, rel=0.05)


def test_condition_guard_warns_near_singularity():
    with pytest.warns(RuntimeWarning):
        task_state(CartesianTask(UNIT), TaskReference([2.0, 0.0]), [0.0, 0.0], [0.0, 0.0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        task_state(CartesianTask(UNIT), TaskReference([1.0, 1.0]), [0.3, 1.0], [0.0, 0.0])


def test_chain_rejects_bad_lengths():
    with pytest.raises(ValueError):
        PlanarChain((1.0, 0.0))
