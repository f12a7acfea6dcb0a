import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustqp.model import DesiredState, RobotState, integrate_desired, tracking_error

finite = st.floats(-1e3, 1e3, allow_nan=False)


@pytest.mark.parametrize(
    "q, qd, u, dt, q_new, qd_new",
    [
        (0.0, 0.0, 1.0, 0.1, 0.005, 0.1),
        (1.0, 0.0, 0.0, 0.5, 1.0, 0.0),
        (0.0, 2.0, -4.0, 1.0, 0.0, -2.0),
    ],
)
def test_integrate_desired_examples(q, qd, u, dt, q_new, qd_new):
    out = integrate_desired(DesiredState([q], [qd]), [u], dt)
    assert out.q_d[0] == pytest.approx(q_new, abs=1e-15)
    assert out.qd_d[0] == pytest.approx(qd_new, abs=1e-15)


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_integrate_desired_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        integrate_desired(DesiredState([0.0], [0.0]), [bad], 0.1)


@pytest.mark.parametrize("dt", [0.0, -1e-3, np.nan])
def test_integrate_desired_rejects_bad_dt(dt):
    with pytest.raises(ValueError):
        integrate_desired(DesiredState([0.0], [0.0]), [1.0], dt)


def test_integrate_desired_dimension_mismatch():
    with pytest.raises(ValueError):
        integrate_desired(DesiredState([0.0, 1.0], [0.0, 0.0]), [1.0], 0.1)


@settings(max_examples=60, deadline=None)
@given(q=finite, qd=finite, u=finite, n=st.integers(1, 50), dt=st.floats(1e-4, 1e-1))
def test_zoh_composition(q, qd, u, n, dt):
    state = DesiredState([q], [qd])
    stepped = state
    for _ in range(n):
        stepped = integrate_desired(stepped, [u], dt)
    once = integrate_desired(state, [u], n * dt)
    scale = 1.0 + abs(q) + abs(qd) * n * dt + abs(u) * (n * dt) ** 2
    np.testing.assert_allclose(stepped.q_d, once.q_d, atol=1e-11 * scale * n)
    np.testing.assert_allclose(stepped.qd_d, once.qd_d, atol=1e-11 * scale * n)


def test_tracking_error_examples():
    zero = tracking_error(RobotState([1.0], [2.0]), DesiredState([1.0], [2.0]))
    np.testing.assert_array_equal(zero.phi, [0.0, 0.0])

    e = tracking_error(RobotState([1.1], [0.0]), DesiredState([1.0], [0.0]))
    np.testing.assert_allclose(e.phi, [0.1, 0.0], atol=1e-15)

    e = tracking_error(RobotState([0.0, 0.0], [1.0, -1.0]), DesiredState([0.0, 0.0], [0.0, 0.0]))
    np.testing.assert_array_equal(e.phi, [0.0, 0.0, 1.0, -1.0])
    np.testing.assert_array_equal(e.position, [0.0, 0.0])
    np.testing.assert_array_equal(e.velocity, [1.0, -1.0])


def test_tracking_error_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        tracking_error(RobotState([0.0, 0.0], [0.0, 0.0]), DesiredState([0.0], [0.0]))


@given(st.lists(finite, min_size=4, max_size=4))
def test_tracking_error_antisymmetric(v):
    a = RobotState(v[:1], v[1:2])
    b = RobotState(v[2:3], v[3:4])
    ab = tracking_error(a, DesiredState(b.q_hat, b.qd_hat)).phi
    ba = tracking_error(b, DesiredState(a.q_hat, a.qd_hat)).phi
    np.testing.assert_array_equal(ab, -ba)


def test_state_rejects_mismatched_lengths():
    with pytest.raises(ValueError):
        RobotState([0.0, 1.0], [0.0])
    with pytest.raises(ValueError):
        DesiredState([0.0], [np.nan])
