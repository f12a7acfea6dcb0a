"""Closed-loop scenario engine and stability metrics.

One control step samples the references and schedules, evaluates every task
and barrier on both the measured and the integrator state, builds the QP,
integrates the desired state with the QP acceleration and finally advances the
servo plant with the new desired state held over the interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import control
from .control import BarrierGains, BarrierPsi, ConstraintRow, TaskGains, TaskPsi
from .kinematics import (
    CartesianTask,
    HalfPlaneBarrier,
    JointPositionBarrier,
    JointTask,
    JointVelocityBarrier,
    PlanarChain,
    TaskReference,
    barrier_state,
    task_state,
)
from .plant import DEFAULT_BLOWUP_CAP, JointPropagator, ServoParams
from .qp import ActiveSetSolver, QpInfeasible, TaskTerm, assemble

FEEDFORWARD = "feedforward"
TASK_LAWS = control.TASK_LAWS + (FEEDFORWARD,)
BARRIER_MODES = ("feedforward-ecbf", "feedback-ecbf", "recbf")
BARRIER_KINDS = ("joint-upper", "joint-lower", "velocity-upper", "velocity-lower", "halfplane")
TASK_KINDS = ("joint", "cartesian")

DEFAULT_ACTIVATION = 4.0
NOISE_FLOOR = 1e-4
SETTLE_TOL = 0.02
OSC_FLAG = 0.95


class ScenarioError(ValueError):
    """A scenario violates a configuration invariant."""


@dataclass(frozen=True)
class Setpoint:
    """Reference value held from time ``t`` [s] until the next set-point."""

    t: float
    value: tuple[float, ...]


@dataclass(frozen=True)
class TaskConfig:
    kind: str
    law: str
    Ks: tuple[float, ...]
    Kd: tuple[float, ...]
    setpoints: tuple[Setpoint, ...]
    Ki: tuple[float, ...] = (0.0,)
    joints: tuple[int, ...] | None = None
    weight: float = 1.0
    name: str = ""


@dataclass(frozen=True)
class BarrierConfig:
    kind: str
    mode: str
    Ks_h: float
    Kd_h: float
    Ki_h: float = 0.0
    joint: int = 0
    limit: float = 0.0
    normal: tuple[float, float] = (0.0, 0.0)
    offset: float = 0.0
    activation: float = DEFAULT_ACTIVATION
    always_active: bool = False
    name: str = ""


@dataclass(frozen=True)
class Disturbance:
    """Constant torque [N m] on ``joint`` over ``[t_start, t_end)``; ``t_end=None`` persists."""

    joint: int
    torque: float
    t_start: float = 0.0
    t_end: float | None = None


@dataclass(frozen=True)
class GainRamp:
    """Stepwise stiffness ramp: ``Ks = ks_start + k * ks_step`` in episode ``k``.

    ``Kd = kd_ratio * sqrt(Ks)`` and ``Ki = ki_eps * Kd`` are recomputed with
    every update.
    """

    ks_start: float
    ks_step: float
    episode: float
    task: int = 0
    kd_ratio: float = 2.0
    ki_eps: float = 0.0


@dataclass(frozen=True)
class PostureConfig:
    Kp: float
    Kv: float
    q_post: tuple[float, ...]
    weight: float = 1e-3


@dataclass(frozen=True)
class Scenario:
    name: str
    servos: tuple[ServoParams, ...]
    tasks: tuple[TaskConfig, ...]
    t_end: float
    dt: float = 1e-3
    substeps: int = 10
    q0: tuple[float, ...] | None = None
    link_lengths: tuple[float, ...] | None = None
    barriers: tuple[BarrierConfig, ...] = ()
    disturbances: tuple[Disturbance, ...] = ()
    gain_ramp: GainRamp | None = None
    posture: PostureConfig | None = None
    u_bound: float | None = None
    blowup_cap: float = DEFAULT_BLOWUP_CAP
    osc_window: float = 2.0
    settle_tol: float = SETTLE_TOL
    noise_floor: float = NOISE_FLOOR
    description: str = ""

    @property
    def dof(self) -> int:
        return len(self.servos)


# --- validation ------------------------------------------------------------


def _task_dim(t: TaskConfig, dof: int) -> int:
    if t.kind == "cartesian":
        return 2
    return dof if t.joints is None else len(t.joints)


def _task_gains(t: TaskConfig, m: int) -> TaskGains:
    return TaskGains(np.broadcast_to(t.Ks, (m,)), np.broadcast_to(t.Kd, (m,)), np.broadcast_to(t.Ki, (m,)))


def validate(s: Scenario) -> None:
    """Check every configuration invariant of ``s``.

    Raises:
        ScenarioError: naming the offending field.
    """
    if not (math.isfinite(s.dt) and s.dt > 0):
        raise ScenarioError(f"dt: must be positive, got {s.dt}")
    if not s.t_end > s.dt:
        raise ScenarioError(f"t_end: must exceed dt, got {s.t_end}")
    if s.substeps < 1:
        raise ScenarioError(f"substeps: must be >= 1, got {s.substeps}")
    if s.dof < 1:
        raise ScenarioError("servos: at least one joint is required")
    if s.q0 is not None and len(s.q0) != s.dof:
        raise ScenarioError(f"q0: expected {s.dof} values, got {len(s.q0)}")
    if not s.tasks and s.posture is None:
        raise ScenarioError("tasks: need at least one task or a posture regularizer")
    if s.link_lengths is not None and len(s.link_lengths) != s.dof:
        raise ScenarioError(f"link_lengths: expected {s.dof} values")
    for i, t in enumerate(s.tasks):
        where = f"tasks[{i}]"
        if t.kind not in TASK_KINDS:
            raise ScenarioError(f"{where}.kind: unknown {t.kind!r}")
        if t.kind == "cartesian" and s.link_lengths is None:
            raise ScenarioError(f"{where}.kind: cartesian task needs link_lengths")
        if t.law not in TASK_LAWS:
            raise ScenarioError(f"{where}.law: unknown {t.law!r}")
        m = _task_dim(t, s.dof)
        if not t.setpoints:
            raise ScenarioError(f"{where}.setpoints: at least one set-point required")
        times = [sp.t for sp in t.setpoints]
        if times != sorted(times):
            raise ScenarioError(f"{where}.setpoints: must be sorted by time")
        if any(len(sp.value) != m for sp in t.setpoints):
            raise ScenarioError(f"{where}.setpoints: values must have {m} entries")
        if not t.weight >= 0:
            raise ScenarioError(f"{where}.weight: must be >= 0")
        try:
            gains = _task_gains(t, m)
            if s.gain_ramp is None or s.gain_ramp.task != i:
                gains.validate(t.law if t.law != FEEDFORWARD else control.OUTPUT_FEEDBACK)
        except (ValueError, control.GainError) as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
    for i, b in enumerate(s.barriers):
        where = f"barriers[{i}]"
        if b.kind not in BARRIER_KINDS:
            raise ScenarioError(f"{where}.kind: unknown {b.kind!r}")
        if b.mode not in BARRIER_MODES:
            raise ScenarioError(f"{where}.mode: unknown {b.mode!r}")
        if b.kind == "halfplane" and s.link_lengths is None:
            raise ScenarioError(f"{where}.kind: half-plane barrier needs link_lengths")
        if b.kind != "halfplane" and not 0 <= b.joint < s.dof:
            raise ScenarioError(f"{where}.joint: out of range")
        if b.kind.startswith("velocity"):
            if b.mode == "recbf":
                raise ScenarioError(f"{where}.mode: velocity bounds support only ECBF modes")
            if not b.Ks_h > 0:
                raise ScenarioError(f"{where}.Ks_h: must be positive")
            continue
        try:
            BarrierGains(b.Ks_h, b.Kd_h, b.Ki_h).validate(robust=b.mode == "recbf")
        except control.GainError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
    for i, d in enumerate(s.disturbances):
        if not 0 <= d.joint < s.dof:
            raise ScenarioError(f"disturbances[{i}].joint: out of range")
        if d.t_end is not None and d.t_end < d.t_start:
            raise ScenarioError(f"disturbances[{i}].t_end: precedes t_start")
    starts = [d.t_start for d in s.disturbances]
    if starts != sorted(starts):
        raise ScenarioError("disturbances: must be sorted by t_start")
    if s.gain_ramp is not None:
        r = s.gain_ramp
        if not 0 <= r.task < len(s.tasks):
            raise ScenarioError("gain_ramp.task: out of range")
        if not (r.ks_start > 0 and r.ks_step >= 0 and r.episode > 0):
            raise ScenarioError("gain_ramp: need ks_start > 0, ks_step >= 0, episode > 0")
        law = s.tasks[r.task].law
        if law in (control.HETEROGENEOUS, control.NEGATIVE_DAMPING) and not r.ki_eps > 0:
            raise ScenarioError("gain_ramp.ki_eps: integral law needs a positive ratio")
    if s.posture is not None:
        if len(s.posture.q_post) != s.dof:
            raise ScenarioError(f"posture.q_post: expected {s.dof} values")
        if not s.posture.weight > 0:
            raise ScenarioError("posture.weight: must be > 0")
    if s.u_bound is not None and not s.u_bound > 0:
        raise ScenarioError("u_bound: must be positive")
    if not s.osc_window > 0:
        raise ScenarioError("osc_window: must be positive")


# --- log -------------------------------------------------------------------


@dataclass(eq=False)
class SimLog:
    """Uniformly sampled time series; ``data[:, k]`` is column ``columns[k]``."""

    scenario: str
    columns: tuple[str, ...]
    data: np.ndarray
    dt: float
    blowup: bool = False
    blowup_time: float | None = None
    infeasible_steps: tuple[int, ...] = ()
    segments: tuple[float, ...] = ()
    active_sets: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(f"log has no column {name!r}") from None

    def matching(self, prefix: str) -> np.ndarray:
        idx = [i for i, c in enumerate(self.columns) if c.startswith(prefix)]
        return self.data[:, idx]

    @property
    def t(self) -> np.ndarray:
        return self.column("t")


def log_columns(s: Scenario) -> tuple[str, ...]:
    n = s.dof
    cols = ["t"]
    for prefix in ("q_hat", "qd_hat", "q_d", "qd_d", "u", "tau"):
        cols += [f"{prefix}_{i}" for i in range(n)]
    for j, t in enumerate(s.tasks):
        m = _task_dim(t, n)
        for key in ("e", "edot", "ed", "edotd", "mu"):
            cols += [f"task{j}_{key}_{c}" for c in range(m)]
        cols += [f"task{j}_ks", f"task{j}_delta"]
    for b in range(len(s.barriers)):
        cols += [f"barrier{b}_{key}" for key in ("h", "hdot", "hd", "hdotd", "active")]
    cols += ["kkt_residual", "n_active", "active_mask", "infeasible", "eta_phi_max", "delta_max"]
    return tuple(cols)


# --- engine ----------------------------------------------------------------


def _reference(t_cfg: TaskConfig, t: float) -> TaskReference:
    value = t_cfg.setpoints[0].value
    for sp in t_cfg.setpoints:
        if sp.t <= t + 1e-12:
            value = sp.value
        else:
            break
    return TaskReference(np.asarray(value, dtype=float))


def _disturbance(s: Scenario, t: float) -> np.ndarray:
    tau = np.zeros(s.dof)
    for d in s.disturbances:
        if d.t_start <= t + 1e-12 and (d.t_end is None or t < d.t_end - 1e-12):
            tau[d.joint] += d.torque
    return tau


def _build_task(t_cfg: TaskConfig, s: Scenario, chain: PlanarChain | None):
    if t_cfg.kind == "cartesian":
        return CartesianTask(chain)
    return JointTask(s.dof, t_cfg.joints)


def _build_barrier(b: BarrierConfig, s: Scenario, chain: PlanarChain | None):
    if b.kind == "halfplane":
        return HalfPlaneBarrier(chain, b.normal, b.offset)
    if b.kind.startswith("velocity"):
        return JointVelocityBarrier(s.dof, b.joint, b.limit, upper=b.kind.endswith("upper"))
    return JointPositionBarrier(s.dof, b.joint, b.limit, upper=b.kind.endswith("upper"))


def ramp_gains(r: GainRamp, t: float) -> tuple[float, float, float]:
    k = int(math.floor(t / r.episode + 1e-9))
    ks = r.ks_start + k * r.ks_step
    kd = r.kd_ratio * math.sqrt(ks)
    return ks, kd, r.ki_eps * kd


def _task_mu(law: str, gains: TaskGains, meas, des) -> np.ndarray:
    if law == control.OUTPUT_FEEDBACK:
        return control.mu_output_feedback(gains.Ks, gains.Kd, meas)
    if law == FEEDFORWARD:
        return control.mu_feedforward(gains.Ks, gains.Kd, des)
    return control.mu_heterogeneous(gains, TaskPsi.from_states(meas, des))


def _barrier_row(cfg: BarrierConfig, barrier, q, qd, q_d, qd_d):
    """Return ``(row, measured state, desired state)`` for one barrier."""
    bs = barrier_state(barrier, q, qd)
    bs_d = barrier_state(barrier, q_d, qd_d)
    if isinstance(barrier, JointVelocityBarrier):
        h = bs_d.h if cfg.mode == "feedforward-ecbf" else bs.h
        return control.velocity_row(cfg.Ks_h, h, barrier.input_row()), bs, bs_d
    g = BarrierGains(cfg.Ks_h, cfg.Kd_h, cfg.Ki_h)
    jac_d = barrier.jacobian(q_d)
    drift = barrier.jacobian_dot(q_d, qd_d)
    if cfg.mode == "feedforward-ecbf":
        row = control.ecbf_row_feedforward(g, bs_d, jac_d, drift, qd_d)
    elif cfg.mode == "feedback-ecbf":
        row = control.ecbf_row_feedback(g, bs, jac_d, drift, qd_d)
    else:
        row = control.recbf_row(g, BarrierPsi.from_states(bs, bs_d), jac_d, drift, qd_d)
    return row, bs, bs_d


def run_scenario(s: Scenario) -> SimLog:
    """Simulate ``s`` from rest and return the full log.

    QP infeasibility holds the previous acceleration for the step and records
    the step index; a plant blow-up ends the run early with ``blowup=True``.
    """
    validate(s)
    n = s.dof
    chain = PlanarChain(s.link_lengths) if s.link_lengths is not None else None
    tasks = [_build_task(t, s, chain) for t in s.tasks]
    barriers = [_build_barrier(b, s, chain) for b in s.barriers]
    base_gains = [_task_gains(t, _task_dim(t, n)) for t in s.tasks]
    q0 = np.zeros(n) if s.q0 is None else np.asarray(s.q0, dtype=float)
    q, qd = q0.copy(), np.zeros(n)
    q_d, qd_d = q0.copy(), np.zeros(n)
    prop = JointPropagator(tuple(s.servos), float(s.dt), int(s.substeps))
    half_dt2 = 0.5 * s.dt * s.dt
    solver = ActiveSetSolver()
    eye = np.eye(n)
    box = []
    if s.u_bound is not None:
        box = [ConstraintRow(eye[i], s.u_bound) for i in range(n)] + [
            ConstraintRow(-eye[i], s.u_bound) for i in range(n)
        ]

    steps = int(round(s.t_end / s.dt))
    columns = log_columns(s)
    data = np.full((steps + 1, len(columns)), np.nan)
    u_prev = np.zeros(n)
    eta_phi_max = 0.0
    delta_max = 0.0
    infeasible: list[int] = []
    active_sets: list[tuple[int, ...]] = []
    blowup_time = None

    for k in range(steps + 1):
        t = k * s.dt
        tau = _disturbance(s, t)
        row = [t, *q, *qd, *q_d, *qd_d]
        terms = []
        task_cols = []
        for j, (cfg, task) in enumerate(zip(s.tasks, tasks)):
            gains = base_gains[j]
            if s.gain_ramp is not None and s.gain_ramp.task == j:
                ks, kd, ki = ramp_gains(s.gain_ramp, t)
                m = gains.dim
                gains = TaskGains(np.full(m, ks), np.full(m, kd), np.full(m, ki))
            ref = _reference(cfg, t)
            meas = task_state(task, ref, q, qd)
            des = task_state(task, ref, q_d, qd_d)
            mu = _task_mu(cfg.law, gains, meas, des)
            _, _, s_ddot = ref.resolved()
            jac_d = task.jacobian(q_d)
            r = task.jacobian_dot(q_d, qd_d) @ qd_d - s_ddot - mu
            terms.append(TaskTerm(jac_d, r, cfg.weight, cfg.name or f"task{j}"))
            if j == 0:
                phi = np.concatenate([meas.e - des.e, meas.e_dot - des.e_dot])
                eta_phi_max = max(eta_phi_max, float(np.linalg.norm(phi)))
            task_cols.append((meas, des, mu, gains.Ks[0]))
        rows = list(box)
        names = [f"u_bound_{i}" for i in range(len(box))]
        barrier_cols = []
        for b, (cfg, barrier) in enumerate(zip(s.barriers, barriers)):
            brow, bs, bs_d = _barrier_row(cfg, barrier, q, qd, q_d, qd_d)
            active = cfg.always_active or min(bs.h, bs_d.h) <= cfg.activation
            if active:
                rows.append(brow)
                names.append(cfg.name or f"barrier{b}")
            barrier_cols.append((bs, bs_d, active))
        posture = None
        if s.posture is not None:
            pc = s.posture
            kappa = control.posture_feedback(pc.Kp, pc.Kv, q, qd, pc.q_post)
            posture = (eye, kappa, pc.weight)
        problem = assemble(terms, posture, rows, n=n, row_names=names)
        try:
            sol = solver.solve(problem)
            u = sol.u_star
            kkt = sol.kkt_residual
            act = sol.active_set
            slack = sol.slack_per_task
            flag = 0.0
        except QpInfeasible:
            u = u_prev
            kkt = math.nan
            act = ()
            slack = tuple(tm.J @ u + tm.r for tm in terms)
            flag = 1.0
            infeasible.append(k)
        active_sets.append(act)
        row += [*u, *tau]
        for j, (meas, des, mu, ks) in enumerate(task_cols):
            dnorm = float(np.linalg.norm(slack[j]))
            delta_max = max(delta_max, dnorm)
            row += [*meas.e, *meas.e_dot, *des.e, *des.e_dot, *mu, ks, dnorm]
        for bs, bs_d, active in barrier_cols:
            row += [bs.h, bs.h_dot, bs_d.h, bs_d.h_dot, float(active)]
        mask = float(sum(1 << i for i in act if i < 52))
        row += [kkt, float(len(act)), mask, flag, eta_phi_max, delta_max]
        data[k] = row
        if k == steps:
            break
        u_prev = u
        # exact zero-order hold on the integrator, then the servo sees the new command
        q_d, qd_d = q_d + qd_d * s.dt + half_dt2 * u, qd_d + u * s.dt
        q, qd = prop.step(q, qd, q_d, qd_d, tau)
        worst = max(np.max(np.abs(q)), np.max(np.abs(qd)))
        if not worst <= s.blowup_cap:
            blowup_time = t + s.dt
            data = data[: k + 1]
            break

    segments = ()
    if s.gain_ramp is not None:
        ep = s.gain_ramp.episode
        segments = tuple(i * ep for i in range(int(math.ceil(s.t_end / ep - 1e-9)) + 1))
    return SimLog(
        s.name,
        columns,
        data,
        s.dt,
        blowup=blowup_time is not None,
        blowup_time=blowup_time,
        infeasible_steps=tuple(infeasible),
        segments=segments,
        active_sets=tuple(active_sets),
    )


# --- metrics ---------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    settling_time: float
    steady_state_error: float
    overshoot_beyond_boundary: tuple[float, ...]
    time_to_boundary: tuple[float, ...]
    oscillation_index: float
    instability_flag: bool
    segment_flags: tuple[bool, ...] = ()
    first_unstable_segment: int | None = None
    infeasible_steps: int = 0
    eta_phi_max: float = 0.0
    delta_max: float = 0.0

    def as_dict(self) -> dict:
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, tuple):
                val = [_plain(v) for v in val]
            else:
                val = _plain(val)
            out[key] = val
        return out


def _plain(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def oscillation_index(t: np.ndarray, y: np.ndarray, window: float, noise_floor: float = NOISE_FLOOR) -> float:
    """Peak-to-peak of ``y`` over the last window divided by that of the window before.

    ``y`` may be 2-D (one column per signal); the largest per-column index is
    returned. A last-window amplitude under ``noise_floor`` gives 0.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float).reshape(t.size, -1)
    span = t[-1] - t[0]
    if not window > 0 or 2 * window > span + 1e-9:
        raise ValueError(f"window {window} s needs at least {2 * window} s of log, have {span:.6g} s")
    end = t[-1]
    last = t >= end - window - 1e-12
    prev = (t >= end - 2 * window - 1e-12) & (t <= end - window + 1e-12)
    best = 0.0
    for col in y.T:
        amp_last = float(np.ptp(col[last]))
        if amp_last < noise_floor:
            continue
        amp_prev = max(float(np.ptp(col[prev])), noise_floor)
        best = max(best, amp_last / amp_prev)
    return best


def _primary_error(log: SimLog) -> np.ndarray:
    cols = [i for i, c in enumerate(log.columns) if c.startswith("task0_e_")]
    if not cols:
        return log.matching("q_hat_")
    return log.data[:, cols]


def compute_metrics(log: SimLog, window: float = 2.0, settle_tol: float = SETTLE_TOL,
                    noise_floor: float = NOISE_FLOOR) -> Metrics:
    """Summarise a log; the primary signal is the measured error of the first task.

    A log cut short by a blow-up is flagged unstable whatever its length.

    Raises:
        ValueError: for an empty log or a window longer than a complete log.
    """
    if len(log) == 0:
        raise ValueError("log is empty")
    t = log.t
    span = t[-1] - t[0]
    if window > span + 1e-12 and not log.blowup:
        raise ValueError(f"window {window} s is longer than the log ({span:.6g} s)")
    err = _primary_error(log)
    err_norm = np.linalg.norm(err, axis=1)
    outside = np.nonzero(err_norm > settle_tol)[0]
    if outside.size == 0:
        settling = 0.0
    elif outside[-1] == len(t) - 1:
        settling = math.inf
    else:
        settling = float(t[outside[-1] + 1] - t[0])
    sse = float(err_norm[-1])

    overshoot = []
    ttb = []
    b = 0
    while f"barrier{b}_h" in log.columns:
        h = log.column(f"barrier{b}_h")
        overshoot.append(max(0.0, float(np.max(-h))))
        h0 = h[0]
        if h0 <= 0:
            ttb.append(0.0)
        else:
            hit = np.nonzero(h < 0.01 * h0)[0]
            ttb.append(float(t[hit[0]] - t[0]) if hit.size else math.inf)
        b += 1

    osc = 0.0
    if 2 * window <= span + 1e-9:
        osc = oscillation_index(t, err, window, noise_floor)
    elif not log.blowup:
        raise ValueError(f"window {window} s needs two windows of log, have {span:.6g} s")
    unstable = log.blowup or osc >= OSC_FLAG

    seg_flags = []
    if log.segments:
        edges = list(log.segments)
        for a, z in zip(edges[:-1], edges[1:]):
            sel = (t >= a - 1e-12) & (t < z - 1e-12)
            if log.blowup and log.blowup_time is not None and a <= log.blowup_time <= z + 1e-9:
                seg_flags.append(True)
                break
            if sel.sum() < 3:
                break
            seg_win = min(window, (z - a) / 3.0)
            idx = oscillation_index(t[sel], err[sel], seg_win, noise_floor)
            seg_flags.append(idx >= OSC_FLAG)
        unstable = unstable or any(seg_flags)
    first = next((i for i, f in enumerate(seg_flags) if f), None)

    return Metrics(
        settling_time=settling,
        steady_state_error=sse,
        overshoot_beyond_boundary=tuple(overshoot),
        time_to_boundary=tuple(ttb),
        oscillation_index=osc,
        instability_flag=bool(unstable),
        segment_flags=tuple(seg_flags),
        first_unstable_segment=first,
        infeasible_steps=len(log.infeasible_steps),
        eta_phi_max=float(log.column("eta_phi_max")[-1]),
        delta_max=float(log.column("delta_max")[-1]),
    )


def scenario_metrics(s: Scenario, log: SimLog | None = None) -> Metrics:
    """Metrics with the scenario's window, clamped to half the configured horizon."""
    log = run_scenario(s) if log is None else log
    return compute_metrics(log, min(s.osc_window, s.t_end / 2), s.settle_tol, s.noise_floor)


def _run_one(s: Scenario):
    try:
        return s.name, scenario_metrics(s)
    except Exception as exc:  # isolate per-scenario failures
        return s.name, exc


def batch_run(scenarios: Sequence[Scenario], workers: int | None = None) -> list:
    """Run scenarios independently; results keep input order.

    A failing scenario yields ``(name, exception)`` instead of aborting the batch.
    """
    if not scenarios:
        return []
    if workers is None or workers <= 1:
        return [_run_one(s) for s in scenarios]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, scenarios))
