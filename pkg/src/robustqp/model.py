"""Joint-space state vectors, the desired-state double integrator and tracking errors.

Only the fixed-base case is modelled: the measured state is the actuated joint
state ``(q_hat, qd_hat)`` and the controller-side state is the output of a
double integrator driven by the QP acceleration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_vector(name: str, value) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float)).copy()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries: {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class RobotState:
    """Measured joint positions [rad] and velocities [rad/s]."""

    q_hat: np.ndarray
    qd_hat: np.ndarray

    def __post_init__(self):
        q = _as_vector("q_hat", self.q_hat)
        qd = _as_vector("qd_hat", self.qd_hat)
        if q.shape != qd.shape:
            raise ValueError(f"q_hat and qd_hat lengths differ: {q.size} vs {qd.size}")
        object.__setattr__(self, "q_hat", q)
        object.__setattr__(self, "qd_hat", qd)

    @property
    def dof(self) -> int:
        return self.q_hat.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q_hat, self.qd_hat])


@dataclass(frozen=True, eq=False)
class DesiredState:
    """Integrator-side joint positions [rad] and velocities [rad/s]."""

    q_d: np.ndarray
    qd_d: np.ndarray

    def __post_init__(self):
        q = _as_vector("q_d", self.q_d)
        qd = _as_vector("qd_d", self.qd_d)
        if q.shape != qd.shape:
            raise ValueError(f"q_d and qd_d lengths differ: {q.size} vs {qd.size}")
        object.__setattr__(self, "q_d", q)
        object.__setattr__(self, "qd_d", qd)

    @property
    def dof(self) -> int:
        return self.q_d.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q_d, self.qd_d])


@dataclass(frozen=True, eq=False)
class TrackingError:
    """Stacked ``[q_hat - q_d, qd_hat - qd_d]`` (length 2n)."""

    phi: np.ndarray

    @property
    def position(self) -> np.ndarray:
        return self.phi[: self.phi.size // 2]

    @property
    def velocity(self) -> np.ndarray:
        return self.phi[self.phi.size // 2 :]


def integrate_desired(state: DesiredState, u, dt: float) -> DesiredState:
    """Advance the double integrator by ``dt`` with ``u`` held constant.

    The zero-order-hold update is exact for a piecewise-constant acceleration,
    so N steps of ``dt`` agree with one step of ``N*dt`` up to round-off.
    """
    if not (np.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be a positive finite number, got {dt}")
    u = _as_vector("u", u)
    if u.shape != state.q_d.shape:
        raise ValueError(f"u has length {u.size}, state has {state.dof} joints")
    q = state.q_d + state.qd_d * dt + 0.5 * u * dt * dt
    qd = state.qd_d + u * dt
    return DesiredState(q, qd)


def tracking_error(actual: RobotState, desired: DesiredState) -> TrackingError:
    if actual.dof != desired.dof:
        raise ValueError(
            f"dimension mismatch: measured state has {actual.dof} joints, "
            f"desired state has {desired.dof}"
        )
    return TrackingError(actual.as_vector() - desired.as_vector())
