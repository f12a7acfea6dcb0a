"""Planar serial-chain kinematics, task maps and barrier functions.

Task and barrier states are evaluated twice per control step: once on the
measured joint state and once on the integrator (desired) state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

CONDITION_WARNING = 1e8


@dataclass(frozen=True)
class PlanarChain:
    """Revolute planar chain with its base at the origin."""

    link_lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.link_lengths)
        if not lengths or any(not v > 0 for v in lengths):
            raise ValueError(f"link lengths must all be positive, got {lengths}")
        object.__setattr__(self, "link_lengths", lengths)

    @property
    def dof(self) -> int:
        return len(self.link_lengths)


def _check_dim(chain: PlanarChain, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.dof,):
        raise ValueError(f"expected {chain.dof} joint values, got shape {q.shape}")
    return q


def fk(chain: PlanarChain, q) -> np.ndarray:
    q = _check_dim(chain, q)
    lengths = np.asarray(chain.link_lengths)
    theta = np.cumsum(q)
    return np.array([lengths @ np.cos(theta), lengths @ np.sin(theta)])


def jacobian(chain: PlanarChain, q) -> np.ndarray:
    q = _check_dim(chain, q)
    lengths = np.asarray(chain.link_lengths)
    theta = np.cumsum(q)
    # column i sums the contributions of links i..n-1
    xs = np.cumsum((lengths * np.cos(theta))[::-1])[::-1]
    ys = np.cumsum((lengths * np.sin(theta))[::-1])[::-1]
    return np.vstack([-ys, xs])


def jacobian_dot(chain: PlanarChain, q, qd) -> np.ndarray:
    """Time derivative of :func:`jacobian` along the joint velocity ``qd``."""
    q = _check_dim(chain, q)
    qd = _check_dim(chain, qd)
    lengths = np.asarray(chain.link_lengths)
    theta = np.cumsum(q)
    theta_dot = np.cumsum(qd)
    xs = np.cumsum((lengths * np.cos(theta) * theta_dot)[::-1])[::-1]
    ys = np.cumsum((lengths * np.sin(theta) * theta_dot)[::-1])[::-1]
    return np.vstack([-xs, -ys])


def _guard_condition(jac: np.ndarray) -> None:
    if jac.shape[0] <= jac.shape[1]:
        cond = np.linalg.cond(jac @ jac.T)
        if not cond < CONDITION_WARNING:
            warnings.warn(f"task Jacobian is near-singular (condition number {cond:.3g})", RuntimeWarning)


# --- task maps -------------------------------------------------------------


class JointTask:
    """Identity map on a subset of joints: ``s(q) = q[joints]``."""

    def __init__(self, dof: int, joints=None):
        self.dof = int(dof)
        self.joints = tuple(range(dof)) if joints is None else tuple(int(j) for j in joints)
        if not self.joints or any(not 0 <= j < dof for j in self.joints):
            raise ValueError(f"joint indices {self.joints} out of range for {dof} joints")
        self._sel = np.eye(self.dof)[list(self.joints)]
        self._zero = np.zeros_like(self._sel)

    @property
    def dim(self) -> int:
        return len(self.joints)

    def value(self, q) -> np.ndarray:
        return np.asarray(q, dtype=float)[list(self.joints)]

    def jacobian(self, q) -> np.ndarray:
        return self._sel

    def jacobian_dot(self, q, qd) -> np.ndarray:
        return self._zero


class CartesianTask:
    """End-effector position of a planar chain."""

    def __init__(self, chain: PlanarChain):
        self.chain = chain
        self.dof = chain.dof

    @property
    def dim(self) -> int:
        return 2

    def value(self, q) -> np.ndarray:
        return fk(self.chain, q)

    def jacobian(self, q) -> np.ndarray:
        jac = jacobian(self.chain, q)
        _guard_condition(jac)
        return jac

    def jacobian_dot(self, q, qd) -> np.ndarray:
        return jacobian_dot(self.chain, q, qd)


@dataclass(frozen=True, eq=False)
class TaskReference:
    """Task reference sampled at the current time."""

    s: np.ndarray
    s_dot: np.ndarray | None = None
    s_ddot: np.ndarray | None = None

    def resolved(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = np.atleast_1d(np.asarray(self.s, dtype=float))
        zero = np.zeros_like(s)
        sd = zero if self.s_dot is None else np.atleast_1d(np.asarray(self.s_dot, dtype=float))
        sdd = zero if self.s_ddot is None else np.atleast_1d(np.asarray(self.s_ddot, dtype=float))
        return s, sd, sdd


@dataclass(frozen=True, eq=False)
class TaskState:
    """Task error ``e = s(q) - s_ref`` and its rate ``e_dot = J qd - s_dot_ref``."""

    e: np.ndarray
    e_dot: np.ndarray


def task_state(task, ref: TaskReference, q, qd) -> TaskState:
    """Evaluate the task output state at ``(q, qd)``.

    Called with the measured state for ``(e, e_dot)`` and with the integrator
    state for ``(e_d, e_dot_d)``.
    """
    s_ref, sd_ref, _ = ref.resolved()
    e = task.value(q) - s_ref
    e_dot = task.jacobian(q) @ np.asarray(qd, dtype=float) - sd_ref
    return TaskState(e, e_dot)


# --- barriers --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BarrierState:
    h: float
    h_dot: float


class JointPositionBarrier:
    """Joint box bound: ``h = limit - q_j`` (upper) or ``h = q_j - limit`` (lower)."""

    relative_degree = 2

    def __init__(self, dof: int, joint: int, limit: float, upper: bool = True):
        if not 0 <= joint < dof:
            raise ValueError(f"joint index {joint} out of range for {dof} joints")
        self.dof = dof
        self.joint = joint
        self.limit = float(limit)
        self.upper = upper
        self._sign = -1.0 if upper else 1.0
        self._jac = np.zeros(dof)
        self._jac[joint] = self._sign
        self._zero = np.zeros(dof)

    def value(self, q) -> float:
        return float(self._sign * (q[self.joint] - self.limit))

    def jacobian(self, q) -> np.ndarray:
        return self._jac

    def jacobian_dot(self, q, qd) -> np.ndarray:
        return self._zero


class JointVelocityBarrier:
    """Joint velocity bound ``h = limit - qd_j`` (upper) or ``h = qd_j - limit``.

    This barrier has relative degree one: the acceleration appears in ``h_dot``
    directly, so only the stiffness-like gain enters its constraint row and
    :func:`barrier_state` reports ``h_dot = 0``.
    """

    relative_degree = 1

    def __init__(self, dof: int, joint: int, limit: float, upper: bool = True):
        if not 0 <= joint < dof:
            raise ValueError(f"joint index {joint} out of range for {dof} joints")
        self.dof = dof
        self.joint = joint
        self.limit = float(limit)
        self.upper = upper
        self._sign = -1.0 if upper else 1.0
        self._input = np.zeros(dof)
        self._input[joint] = self._sign

    def value_from_velocity(self, qd) -> float:
        return float(self._sign * (qd[self.joint] - self.limit))

    def input_row(self) -> np.ndarray:
        """Coefficient of the acceleration in ``h_dot``."""
        return self._input


class HalfPlaneBarrier:
    """End-effector half-plane ``h = n . fk(q) + offset``."""

    relative_degree = 2

    def __init__(self, chain: PlanarChain, normal, offset: float):
        normal = np.asarray(normal, dtype=float)
        if normal.shape != (2,) or not np.linalg.norm(normal) > 0:
            raise ValueError(f"normal must be a nonzero 2-vector, got {normal}")
        self.chain = chain
        self.dof = chain.dof
        self.normal = normal
        self.offset = float(offset)

    def value(self, q) -> float:
        return float(self.normal @ fk(self.chain, q) + self.offset)

    def jacobian(self, q) -> np.ndarray:
        return self.normal @ jacobian(self.chain, q)

    def jacobian_dot(self, q, qd) -> np.ndarray:
        return self.normal @ jacobian_dot(self.chain, q, qd)


SUPPORTED_BARRIERS = (JointPositionBarrier, JointVelocityBarrier, HalfPlaneBarrier)


def barrier_state(barrier, q, qd) -> BarrierState:
    """Barrier value and rate ``h_dot = J_h qd`` at ``(q, qd)``."""
    if isinstance(barrier, JointVelocityBarrier):
        return BarrierState(barrier.value_from_velocity(qd), 0.0)
    if not isinstance(barrier, (JointPositionBarrier, HalfPlaneBarrier)):
        raise TypeError(f"unsupported barrier form: {type(barrier).__name__}")
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    return BarrierState(barrier.value(q), float(barrier.jacobian(q) @ qd))
