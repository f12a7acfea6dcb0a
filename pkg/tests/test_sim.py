import dataclasses
import math

import numpy as np
import pytest

from robustqp import scenarios
from robustqp.control import HETEROGENEOUS, OUTPUT_FEEDBACK
from robustqp.plant import SYSTEM_1, SYSTEM_2, JointPropagator, steady_state
from robustqp.model import DesiredState
from robustqp.qp import EPS_REG
from robustqp.sim import (
    FEEDFORWARD,
    BarrierConfig,
    GainRamp,
    PostureConfig,
    Scenario,
    ScenarioError,
    Setpoint,
    TaskConfig,
    batch_run,
    compute_metrics,
    log_columns,
    oscillation_index,
    ramp_gains,
    run_scenario,
    scenario_metrics,
    validate,
)

R10 = math.sqrt(10.0)


def joint_scenario(law=OUTPUT_FEEDBACK, ks=10.0, kd=2 * R10, ki=0.0, ref=1.0, t_end=1.0, **kw):
    task = TaskConfig("joint", law, (ks,), (kd,), (Setpoint(0.0, (ref,)),), Ki=(ki,))
    return Scenario(name="test", servos=kw.pop("servos", (SYSTEM_1,)), tasks=(task,), t_end=t_end, **kw)


def reference_loop(s: Scenario, law: str):
    """Directly wired 1-DoF loop: u from the task law, ZOH integrator, servo step."""
    p = s.servos[0]
    t_cfg = s.tasks[0]
    ks, kd, ki = t_cfg.Ks[0], t_cfg.Kd[0], t_cfg.Ki[0]
    ref = t_cfg.setpoints[0].value[0]
    prop = JointPropagator((p,), s.dt, s.substeps)
    q = qd = q_d = qd_d = np.zeros(1)
    out = []
    for _ in range(int(round(s.t_end / s.dt)) + 1):
        if law == OUTPUT_FEEDBACK:
            mu = -ks * (q - ref) - kd * qd
        elif law == FEEDFORWARD:
            mu = -ks * (q_d - ref) - kd * qd_d
        else:
            mu = -ks * (q - ref) - kd * qd - ki * qd_d
        u = mu / (1.0 + EPS_REG)
        out.append((q[0], q_d[0], u[0]))
        q_d, qd_d = q_d + qd_d * s.dt + 0.5 * s.dt**2 * u, qd_d + u * s.dt
        q, qd = prop.step(q, qd, q_d, qd_d, np.zeros(1))
    return np.array(out)


@pytest.mark.parametrize(
    "law, ki", [(OUTPUT_FEEDBACK, 0.0), (FEEDFORWARD, 0.0), (HETEROGENEOUS, 2.0)]
)
def test_feedback_paths_match_wired_loop(law, ki):
    s = joint_scenario(law, ki=ki)
    log = run_scenario(s)
    ref = reference_loop(s, law)
    np.testing.assert_allclose(log.column("q_hat_0"), ref[:, 0], atol=1e-10)
    np.testing.assert_allclose(log.column("q_d_0"), ref[:, 1], atol=1e-10)
    np.testing.assert_allclose(log.column("u_0"), ref[:, 2], atol=1e-8)


def test_log_schema():
    s = scenarios.builtin("fig7-ffwd")
    cols = log_columns(s)
    assert cols[:7] == ("t", "q_hat_0", "qd_hat_0", "q_d_0", "qd_d_0", "u_0", "tau_0")
    assert "task0_e_0" in cols and "task0_ed_0" in cols and "barrier0_hd" in cols
    assert cols[-6:] == ("kkt_residual", "n_active", "active_mask", "infeasible", "eta_phi_max", "delta_max")
    log = run_scenario(dataclasses.replace(s, t_end=0.1))
    assert log.data.shape == (101, len(cols))
    np.testing.assert_allclose(np.diff(log.t), 1e-3, atol=1e-15)
    assert np.nanmax(log.column("kkt_residual")) <= 1e-8


def test_feedforward_barrier_keeps_desired_state_safe():
    log = run_scenario(scenarios.builtin("fig7-ffwd"))
    active = log.column("barrier0_active") == 1.0
    assert active.any()
    assert np.all(log.column("barrier0_hd")[active] >= -1e-6)
    # the plant sits beyond the limit by the static servo offset
    ss = steady_state(SYSTEM_2, DesiredState([3.0], [0.0]), 5.0).q[0] - 3.0
    assert -log.column("barrier0_h")[-1] == pytest.approx(ss, abs=2e-4)


def test_disturbance_rejection_with_integral_gain():
    s = scenarios.fig8(1.0)
    log = run_scenario(s)
    floor = steady_state(SYSTEM_1, DesiredState([1.0], [0.0]), 5.0).q[0] - 1.0
    assert abs(log.column("q_hat_0")[-1] - 1.0) <= floor
    # the desired state compensates by settling on the other side of the reference
    assert log.column("q_d_0")[-1] == pytest.approx(1.0 - floor, abs=1e-4)


def test_infeasible_rows_hold_previous_command():
    barriers = (
        BarrierConfig("joint-upper", "feedback-ecbf", 100.0, 20.0, limit=0.0, always_active=True, name="hi"),
        BarrierConfig("joint-lower", "feedback-ecbf", 100.0, 20.0, limit=0.5, always_active=True, name="lo"),
    )
    s = joint_scenario(q0=(0.25,), barriers=barriers, t_end=0.01)
    log = run_scenario(s)
    assert len(log.infeasible_steps) == len(log)
    assert np.all(log.column("infeasible") == 1.0)
    np.testing.assert_array_equal(log.column("u_0"), 0.0)


def test_blowup_truncates_log():
    s = dataclasses.replace(scenarios.builtin("fig4-right"), blowup_cap=2.0)
    log = run_scenario(s)
    assert log.blowup and log.blowup_time < s.t_end
    assert len(log) < int(s.t_end / s.dt)
    assert compute_metrics(log, s.osc_window).instability_flag
    assert scenario_metrics(s, log).instability_flag


def test_posture_and_box_bounds():
    post = PostureConfig(Kp=4.0, Kv=4.0, q_post=(0.0,), weight=1e-3)
    s = joint_scenario(ref=5.0, posture=post, u_bound=2.0, t_end=0.5)
    log = run_scenario(s)
    assert np.max(np.abs(log.column("u_0"))) <= 2.0 + 1e-12
    assert np.max(log.column("n_active")) >= 1


def test_ramp_gains():
    r = GainRamp(400.0, 50.0, 3.0, kd_ratio=2.0, ki_eps=1.0)
    assert ramp_gains(r, 0.0) == (400.0, 40.0, 40.0)
    ks, kd, ki = ramp_gains(r, 6.0)
    assert ks == 500.0 and kd == pytest.approx(2 * math.sqrt(500.0)) and ki == kd


@pytest.mark.parametrize(
    "change, field",
    [
        ({"dt": 0.0}, "dt"),
        ({"t_end": 0.0}, "t_end"),
        ({"q0": (0.0, 1.0)}, "q0"),
        ({"osc_window": -1.0}, "osc_window"),
        ({"u_bound": 0.0}, "u_bound"),
    ],
)
def test_validate_names_field(change, field):
    s = dataclasses.replace(joint_scenario(), **change)
    with pytest.raises(ScenarioError, match=field):
        validate(s)


def test_validate_rejects_bad_components():
    s = joint_scenario(ks=1.0, kd=0.0)
    with pytest.raises(ScenarioError, match=r"tasks\[0\]"):
        validate(s)
    bad = BarrierConfig("velocity-upper", "recbf", 10.0, 10.0, 5.0, limit=1.0)
    with pytest.raises(ScenarioError, match=r"barriers\[0\]\.mode"):
        validate(joint_scenario(barriers=(bad,)))
    complex_poles = BarrierConfig("joint-upper", "feedback-ecbf", 2500.0, 1.0, limit=1.0)
    with pytest.raises(ScenarioError, match=r"barriers\[0\]"):
        validate(joint_scenario(barriers=(complex_poles,)))
    cart = dataclasses.replace(joint_scenario(), tasks=(dataclasses.replace(joint_scenario().tasks[0], kind="cartesian"),))
    with pytest.raises(ScenarioError, match="link_lengths"):
        validate(cart)


def test_velocity_barrier_limits_speed():
    # the feedforward row bounds the integrator velocity itself
    vb = BarrierConfig("velocity-upper", "feedforward-ecbf", 50.0, 0.0, limit=0.5, always_active=True)
    s = joint_scenario(ref=3.0, barriers=(vb,), t_end=2.0)
    log = run_scenario(s)
    assert np.max(log.column("qd_d_0")) <= 0.5 + 1e-6


# --- metrics ---------------------------------------------------------------


def test_metrics_constant_log():
    s = joint_scenario(q0=(1.0,), t_end=5.0)
    m = compute_metrics(run_scenario(s))
    assert m.settling_time == 0.0 and m.oscillation_index == 0.0 and not m.instability_flag


def test_oscillation_index_of_sine():
    t = np.arange(0.0, 10.0, 1e-3)
    assert oscillation_index(t, np.sin(2 * np.pi * t), 2.0) == pytest.approx(1.0, abs=1e-6)
    assert oscillation_index(t, np.exp(-t) * np.sin(2 * np.pi * 3 * t), 2.0) < 0.5
    assert oscillation_index(t, 1e-6 * np.sin(2 * np.pi * t), 2.0) == 0.0


def test_window_longer_than_log_rejected():
    log = run_scenario(joint_scenario(t_end=1.0))
    with pytest.raises(ValueError):
        compute_metrics(log, window=5.0)


def test_overshoot_metric():
    m = compute_metrics(run_scenario(scenarios.builtin("fig7-ffwd")))
    assert m.overshoot_beyond_boundary[0] == pytest.approx(0.00988, abs=2e-4)
    assert m.time_to_boundary[0] > 0


def test_segment_flags_for_gain_ramp():
    s = scenarios.planar_gain_ramp(episodes=3, episode=3.0)
    log = run_scenario(s)
    m = compute_metrics(log, s.osc_window)
    assert len(m.segment_flags) == 3
    assert m.first_unstable_segment in (None, 0, 1, 2)


def test_batch_run():
    assert batch_run([]) == []
    s = joint_scenario()
    bad = dataclasses.replace(s, name="bad", dt=-1.0)
    out = batch_run([s, bad, s], workers=1)
    assert [name for name, _ in out] == ["test", "bad", "test"]
    assert out[0][1].as_dict() == out[2][1].as_dict()
    assert isinstance(out[1][1], ScenarioError)


def test_scenario_metrics_deterministic():
    s = joint_scenario(t_end=4.0)
    assert scenario_metrics(s).as_dict() == scenario_metrics(s).as_dict()


@pytest.mark.parametrize("name", ["fig8-eps-1", "fig10-a", "fig10-b"])
def test_desired_state_within_ultimate_bound(name):
    from robustqp import control
    from robustqp.control import TaskGains

    s = scenarios.builtin(name)
    t = s.tasks[0]
    g = TaskGains(t.Ks, t.Kd, t.Ki)
    p = control.are_solve(g.Ks, g.kd_eff, g.Ki)
    log = run_scenario(s)
    rep = control.robustness_margin(g, p, float(log.column("eta_phi_max")[-1]),
                                    delta_max=float(log.column("delta_max")[-1]))
    eta = np.column_stack([log.column("task0_ed_0"), log.column("task0_edotd_0")])
    assert np.linalg.norm(eta, axis=1).max() <= rep.ultimate_bound
