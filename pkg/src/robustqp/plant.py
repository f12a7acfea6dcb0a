"""Per-joint linear servo standing in for the kinematic-controlled robot.

Each joint is a PD-servoed DC motor reduced to

    d/dt [q, qd] = [[0, 1], [a1, a2]] [q, qd] + [[0, 0], [a3, a4]] [q_d, qd_d] + [0, a5] tau_l

The controller never sees these parameters; they only drive the simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import DesiredState

DEFAULT_BLOWUP_CAP = 1e6


class PlantBlowUp(RuntimeError):
    """Raised when a plant state entry exceeds the blow-up cap."""

    def __init__(self, state: "PlantState", cap: float):
        self.state = state
        self.cap = cap
        worst = float(np.max(np.abs(np.concatenate([state.q, state.qd]))))
        super().__init__(f"plant blow-up: |state| reached {worst:.3g} > cap {cap:.3g}")


@dataclass(frozen=True)
class ServoParams:
    """Closed-loop servo coefficients (units: s^-2, s^-1, s^-2, s^-1, rad/(N m s^2))."""

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float

    def __post_init__(self):
        vals = (self.a1, self.a2, self.a3, self.a4, self.a5)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"servo parameters must be finite: {vals}")
        if not math.isclose(self.a3, -self.a1, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"servo requires a3 = -a1, got a1={self.a1}, a3={self.a3}")
        if not (self.a1 < 0 and self.a2 < 0):
            raise ValueError(
                f"homogeneous servo matrix [[0,1],[a1,a2]] is not Hurwitz "
                f"(a1={self.a1}, a2={self.a2}); the joint dynamics must be ISS"
            )

    @property
    def homogeneous_matrix(self) -> np.ndarray:
        return np.array([[0.0, 1.0], [self.a1, self.a2]])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.homogeneous_matrix)


@dataclass(frozen=True)
class MotorParams:
    """PD gains ``b1, b2`` and electro-mechanical constants ``b3, b4, b5``."""

    b1: float
    b2: float
    b3: float
    b4: float
    b5: float


def servo_from_motor(m: MotorParams) -> ServoParams:
    if not m.b3 > 0:
        raise ValueError(f"b3 must be positive, got {m.b3}")
    if not m.b4 >= 0:
        raise ValueError(f"b4 must be non-negative, got {m.b4}")
    a1 = -m.b1 * m.b3
    return ServoParams(
        a1=a1,
        a2=-m.b2 * m.b3 - m.b4,
        a3=-a1,
        a4=m.b2 * m.b3,
        a5=m.b3 * m.b5,
    )


SYSTEM_1 = ServoParams(-376.5977, -158.5073, 376.5977, 2.8245, 4.7034)
SYSTEM_2 = ServoParams(-2380.6356, -173.5712, 2380.6356, 17.8884, 4.7034)

# Same motor constants, different PD gains; b3 is not identifiable from the
# servo coefficients so it is fixed to 1.
MOTOR_SYSTEM_1 = MotorParams(b1=376.5977, b2=2.8245, b3=1.0, b4=155.6828, b5=4.7034)
MOTOR_SYSTEM_2 = MotorParams(b1=2380.6356, b2=17.8884, b3=1.0, b4=155.6828, b5=4.7034)


def underdamped_servo(wn: float = 70.0, zeta: float = 0.35, a5: float = 4.7034) -> ServoParams:
    """Lightly damped position servo used as the flexible-joint stand-in."""
    return ServoParams(-wn * wn, -2.0 * zeta * wn, wn * wn, 0.0, a5)


UNDERDAMPED = underdamped_servo()


@dataclass(frozen=True, eq=False)
class PlantState:
    """Per-joint measured positions [rad] and velocities [rad/s]."""

    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float)).copy()
        qd = np.atleast_1d(np.asarray(self.qd, dtype=float)).copy()
        if q.shape != qd.shape or q.ndim != 1:
            raise ValueError("q and qd must be 1-D vectors of equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qd", qd)


def _rk4_polynomials(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(m.shape[0])
    m2 = m @ m
    m3 = m2 @ m
    m4 = m3 @ m
    growth = eye + m + m2 / 2.0 + m3 / 6.0 + m4 / 24.0
    forcing = eye + m / 2.0 + m2 / 6.0 + m3 / 24.0
    return growth, forcing


@lru_cache(maxsize=256)
def rk4_propagator(params: ServoParams, dt: float, substeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrices ``(Phi, Gamma)`` with ``x+ = Phi x + Gamma c`` for ``x' = A x + c``.

    One classic RK4 step of size ``h`` on a linear system with constant forcing
    is exactly ``R(hA) x + h S(hA) c``; composing ``substeps`` of them gives the
    returned pair, so the result equals stage-by-stage RK4 up to round-off.
    """
    h = dt / substeps
    a = params.homogeneous_matrix
    growth, forcing = _rk4_polynomials(h * a)
    phi = np.eye(2)
    gamma = np.zeros((2, 2))
    for _ in range(substeps):
        gamma = growth @ gamma + h * forcing
        phi = growth @ phi
    phi.setflags(write=False)
    gamma.setflags(write=False)
    return phi, gamma


def servo_forcing(params: ServoParams, q_d: float, qd_d: float, tau_l: float) -> np.ndarray:
    return np.array([0.0, params.a3 * q_d + params.a4 * qd_d + params.a5 * tau_l])


def rk4_reference_step(
    params: ServoParams, x: np.ndarray, forcing: np.ndarray, dt: float, substeps: int
) -> np.ndarray:
    """Stage-by-stage RK4 for one joint; kept as a cross-check of the propagator."""
    a = params.homogeneous_matrix
    h = dt / substeps
    x = np.asarray(x, dtype=float)

    def f(s):
        return a @ s + forcing

    for _ in range(substeps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def step_plant(
    params: ServoParams | list[ServoParams] | tuple[ServoParams, ...],
    state: PlantState,
    cmd: DesiredState,
    tau_l,
    dt: float,
    substeps: int = 10,
    cap: float = DEFAULT_BLOWUP_CAP,
) -> PlantState:
    """Advance every joint servo by ``dt`` with ``cmd`` and ``tau_l`` held constant.

    Raises:
        PlantBlowUp: if any resulting state entry exceeds ``cap`` in magnitude.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    n = state.q.size
    if isinstance(params, ServoParams):
        params = (params,) * n
    if len(params) != n or cmd.dof != n:
        raise ValueError(f"joint count mismatch: {len(params)} servos, {n} states, {cmd.dof} commands")
    tau = np.broadcast_to(np.asarray(tau_l, dtype=float), (n,))
    prop = JointPropagator(tuple(params), float(dt), int(substeps))
    q, qd = prop.step(state.q, state.qd, cmd.q_d, cmd.qd_d, tau)
    out = PlantState(q, qd)
    check_blowup(out, cap)
    return out


def check_blowup(state: PlantState, cap: float) -> None:
    q, qd = state.q, state.qd
    worst = max(float(np.max(np.abs(q))), float(np.max(np.abs(qd))))
    if not worst <= cap:
        raise PlantBlowUp(state, cap)


class JointPropagator:
    """Per-joint RK4 propagators stacked for vectorised stepping of all joints."""

    def __init__(self, params: tuple[ServoParams, ...], dt: float, substeps: int):
        mats = [rk4_propagator(p, dt, substeps) for p in params]
        self.phi = np.array([m[0] for m in mats])
        self.gamma = np.array([m[1][:, 1] for m in mats])
        self.a3 = np.array([p.a3 for p in params])
        self.a4 = np.array([p.a4 for p in params])
        self.a5 = np.array([p.a5 for p in params])

    def step(self, q, qd, q_d, qd_d, tau) -> tuple[np.ndarray, np.ndarray]:
        c = self.a3 * q_d + self.a4 * qd_d + self.a5 * tau
        phi = self.phi
        q_new = phi[:, 0, 0] * q + phi[:, 0, 1] * qd + self.gamma[:, 0] * c
        qd_new = phi[:, 1, 0] * q + phi[:, 1, 1] * qd + self.gamma[:, 1] * c
        return q_new, qd_new


def steady_state(p: ServoParams, cmd: DesiredState, tau_l) -> PlantState:
    """Analytic steady response to a constant (or constant-velocity) command.

    For ``qd_d = 0`` this is ``q = q_d - (a5/a1) tau_l``, ``qd = 0``. A nonzero
    ``qd_d`` describes a ramp; the returned position is the offset the servo
    settles to relative to the current ``q_d`` and the velocity equals ``qd_d``.
    """
    if p.a1 == 0:
        raise ValueError("a1 must be nonzero for a steady state to exist")
    tau = np.broadcast_to(np.asarray(tau_l, dtype=float), cmd.q_d.shape)
    v = cmd.qd_d
    q = -(p.a3 * cmd.q_d + (p.a2 + p.a4) * v + p.a5 * tau) / p.a1
    return PlantState(q, v.copy())
