"""Task feedback laws, barrier constraint rows and Lyapunov-based gain analysis.

All gain matrices are diagonal and stored as vectors of their diagonals.
Constraint rows use the QP convention ``a . u <= b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import BarrierState, TaskState

OUTPUT_FEEDBACK = "output-feedback"
HETEROGENEOUS = "heterogeneous"
NEGATIVE_DAMPING = "negative-damping"
TASK_LAWS = (OUTPUT_FEEDBACK, HETEROGENEOUS, NEGATIVE_DAMPING)


class GainError(ValueError):
    """A gain set violates the requirements of the selected feedback law."""


def _diag(name: str, value, m: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim == 2:
        if not np.allclose(arr, np.diag(np.diag(arr))):
            raise GainError(f"{name} must be diagonal")
        arr = np.diag(arr).copy()
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise GainError(f"{name} must be a finite diagonal, got {value!r}")
    if m is not None:
        if arr.size == 1 and m > 1:
            arr = np.full(m, arr[0])
        elif arr.size != m:
            raise GainError(f"{name} has {arr.size} entries, expected {m}")
    return arr


@dataclass(frozen=True, eq=False)
class TaskGains:
    """Diagonal task gains; ``Kd`` may be negative in the negative-damping law."""

    Ks: np.ndarray
    Kd: np.ndarray
    Ki: np.ndarray = field(default=None)

    def __post_init__(self):
        ks = _diag("Ks", self.Ks)
        m = ks.size
        object.__setattr__(self, "Ks", ks)
        object.__setattr__(self, "Kd", _diag("Kd", self.Kd, m))
        object.__setattr__(self, "Ki", _diag("Ki", 0.0 if self.Ki is None else self.Ki, m))

    @property
    def dim(self) -> int:
        return self.Ks.size

    @property
    def kd_eff(self) -> np.ndarray:
        return self.Kd + self.Ki

    def validate(self, law: str) -> None:
        """Reject gains that do not meet the requirements of ``law``.

        Raises:
            GainError: with the offending coordinate and values.
        """
        if law not in TASK_LAWS:
            raise GainError(f"unknown task law {law!r}; expected one of {TASK_LAWS}")
        if law == OUTPUT_FEEDBACK:
            if np.any(self.Ki != 0):
                raise GainError("output feedback uses Ks and Kd only; Ki must be zero")
            _, ok = check_hurwitz(self.Ks, self.Kd)
            if not ok:
                raise GainError(f"closed-loop task matrix not Hurwitz for Ks={self.Ks}, Kd={self.Kd}")
            return
        if np.any(self.Ks <= 0) or np.any(self.Ki <= 0):
            raise GainError(f"{law} law needs Ks > 0 and Ki > 0, got Ks={self.Ks}, Ki={self.Ki}")
        if law == NEGATIVE_DAMPING and np.any(self.Kd >= 0):
            raise GainError(f"negative-damping law needs Kd < 0, got {self.Kd}")
        if law == HETEROGENEOUS and np.any(self.Kd < 0):
            raise GainError(f"heterogeneous law needs Kd >= 0 (use {NEGATIVE_DAMPING!r}), got {self.Kd}")
        _, ok = check_hurwitz(self.Ks, self.kd_eff)
        if not ok:
            raise GainError(f"Kd + Ki must be positive for a Hurwitz loop, got {self.kd_eff}")


@dataclass(frozen=True, eq=False)
class TaskPsi:
    """Measured ``e, e_dot`` and desired-side ``e_dot_d``."""

    e: np.ndarray
    e_dot: np.ndarray
    e_dot_d: np.ndarray

    @classmethod
    def from_states(cls, measured: TaskState, desired: TaskState) -> "TaskPsi":
        return cls(measured.e, measured.e_dot, desired.e_dot)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.e, self.e_dot, self.e_dot_d])


@dataclass(frozen=True)
class BarrierGains:
    Ks_h: float
    Kd_h: float
    Ki_h: float = 0.0

    @property
    def kd_eff(self) -> float:
        return self.Kd_h + self.Ki_h

    def validate(self, robust: bool) -> None:
        """Check the exponential-barrier requirements on ``[Ks_h, Kd_h + Ki_h]``.

        The closed loop ``h'' = -Ks_h h - kd h'`` must have real negative poles.
        """
        if robust and not self.Ki_h > 0:
            raise GainError(f"robust barrier requires Ki_h > 0, got {self.Ki_h}")
        kd = self.kd_eff if robust else self.Kd_h
        if not (self.Ks_h > 0 and kd > 0 and kd * kd >= 4.0 * self.Ks_h * (1 - 1e-12)):
            raise GainError(
                f"barrier gains Ks_h={self.Ks_h}, damping={kd} do not give real negative poles"
            )


@dataclass(frozen=True)
class BarrierPsi:
    """Measured ``h, h_dot`` and desired-side ``h_dot_d``."""

    h: float
    h_dot: float
    h_dot_d: float

    @classmethod
    def from_states(cls, measured: BarrierState, desired: BarrierState) -> "BarrierPsi":
        return cls(measured.h, measured.h_dot, desired.h_dot)


@dataclass(frozen=True, eq=False)
class ConstraintRow:
    """Single inequality ``a . u <= b``."""

    a: np.ndarray
    b: float


@dataclass(frozen=True, eq=False)
class StabilityReport:
    P: np.ndarray
    Q: np.ndarray
    eigenvalues: np.ndarray
    threshold: float
    ultimate_bound: float
    margin_ok: bool


# --- task laws -------------------------------------------------------------


def mu_output_feedback(Ks, Kd, eta: TaskState) -> np.ndarray:
    """``mu = -Ks e - Kd e_dot`` on the measured task state."""
    return -np.asarray(Ks) * eta.e - np.asarray(Kd) * eta.e_dot


def mu_heterogeneous(gains: TaskGains, psi: TaskPsi) -> np.ndarray:
    """``mu = -Ks e - Kd e_dot - Ki e_dot_d``.

    The first two terms are evaluated exactly as in :func:`mu_output_feedback`,
    so ``Ki = 0`` reproduces it to the bit.
    """
    return -gains.Ks * psi.e - gains.Kd * psi.e_dot - gains.Ki * psi.e_dot_d


def mu_feedforward(Ks, Kd, eta_d: TaskState) -> np.ndarray:
    """Desired-side law ``mu = -Ks e_d - Kd e_dot_d`` (no measured feedback)."""
    return -np.asarray(Ks) * eta_d.e - np.asarray(Kd) * eta_d.e_dot


# --- barrier rows ----------------------------------------------------------


def _drift(jdot_h_d, alpha_d) -> float:
    return float(np.dot(np.atleast_1d(jdot_h_d), np.atleast_1d(alpha_d)))


def ecbf_row_feedforward(g: BarrierGains, bs_d: BarrierState, J_h_d, Jdot_h_d, alpha_d) -> ConstraintRow:
    """Barrier row on the integrator state only: ``h_d'' >= -Ks_h h_d - Kd_h h_d'``."""
    a = -np.atleast_1d(np.asarray(J_h_d, dtype=float))
    b = _drift(Jdot_h_d, alpha_d) + g.Ks_h * bs_d.h + g.Kd_h * bs_d.h_dot
    return ConstraintRow(a, b)


def ecbf_row_feedback(g: BarrierGains, bs_meas: BarrierState, J_h_d, Jdot_h_d, alpha_d) -> ConstraintRow:
    """Barrier row with the measured ``(h, h_dot)`` in the feedback term."""
    a = -np.atleast_1d(np.asarray(J_h_d, dtype=float))
    b = _drift(Jdot_h_d, alpha_d) + g.Ks_h * bs_meas.h + g.Kd_h * bs_meas.h_dot
    return ConstraintRow(a, b)


def recbf_row(g: BarrierGains, psi_h: BarrierPsi, J_h_d, Jdot_h_d, alpha_d) -> ConstraintRow:
    """Robust barrier row ``-J_h_d u <= Jdot_h_d alpha_d + Ks_h h + Kd_h h' + Ki_h h_d'``.

    ``Ki_h = 0`` is accepted here and yields :func:`ecbf_row_feedback` exactly;
    scenario validation is where a robust barrier with ``Ki_h <= 0`` is refused.
    """
    if g.Ki_h < 0:
        raise GainError(f"Ki_h must be non-negative, got {g.Ki_h}")
    a = -np.atleast_1d(np.asarray(J_h_d, dtype=float))
    b = _drift(Jdot_h_d, alpha_d) + g.Ks_h * psi_h.h + g.Kd_h * psi_h.h_dot
    b = b + g.Ki_h * psi_h.h_dot_d
    return ConstraintRow(a, b)


def velocity_row(Ks_h: float, h: float, input_row) -> ConstraintRow:
    """First-order barrier ``h' >= -Ks_h h`` where ``h' = input_row . u``."""
    return ConstraintRow(-np.asarray(input_row, dtype=float), Ks_h * h)


def barrier_gains_from_pole(lam: float, eps: float = 0.0) -> BarrierGains:
    """Repeated real pole ``lam < 0``: ``Ks_h = lam^2``, damping ``-2 lam``.

    With ``eps > 0`` the damping is split as ``Kd_h = -2 lam`` and
    ``Ki_h = eps * Kd_h``, matching how the robust sweeps scale the integral term.
    """
    if not lam < 0:
        raise GainError(f"barrier pole must be negative, got {lam}")
    kd = -2.0 * lam
    return BarrierGains(lam * lam, kd, eps * kd)


def admissible_start(lam: float, h_d: float, h_dot_d: float) -> bool:
    """Sufficient condition for ``h_d(t) >= 0`` under the repeated-pole barrier.

    With both poles at ``lam``, ``h_d(t) = (h0 + (h_dot0 - lam h0) t) e^{lam t}``
    stays non-negative for ``h0 >= 0`` whenever ``h_dot0 >= lam h0``.
    """
    return h_d >= 0 and h_dot_d >= lam * h_d


def comparison_bound(Ks_h: float, Kd_h: float, h0: float, h_dot0: float, t) -> np.ndarray:
    """``C exp(F t) [h0, h_dot0]`` for ``F = [[0, 1], [-Ks_h, -Kd_h]]``.

    Uniformly spaced ``t`` starting at 0 is propagated with one matrix
    exponential; other grids fall back to one exponential per sample.
    """
    from scipy.linalg import expm

    f = np.array([[0.0, 1.0], [-Ks_h, -Kd_h]])
    x = np.array([h0, h_dot0], dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    steps = np.diff(t)
    if t.size > 1 and t[0] == 0.0 and np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        step = expm(f * steps[0])
        out = np.empty(t.size)
        for i in range(t.size):
            out[i] = x[0]
            x = step @ x
        return out
    return np.array([(expm(f * ti) @ x)[0] for ti in t])


# --- stability analysis ----------------------------------------------------


def closed_loop_matrix(ks: float, kd_eff: float) -> np.ndarray:
    return np.array([[0.0, 1.0], [-ks, -kd_eff]])


def check_hurwitz(Ks, Kd_eff) -> tuple[list[np.ndarray], bool]:
    """Per-coordinate eigenvalues of ``[[0, 1], [-ks, -kd_eff]]`` and a Hurwitz flag."""
    ks = np.atleast_1d(np.asarray(Ks, dtype=float))
    kd = np.broadcast_to(np.atleast_1d(np.asarray(Kd_eff, dtype=float)), ks.shape)
    eigs = [np.linalg.eigvals(closed_loop_matrix(a, b)) for a, b in zip(ks, kd)]
    ok = bool(np.all(ks > 0) and np.all(kd > 0))
    return eigs, ok


def are_solve_scalar(ks: float, kd_eff: float, ki: float) -> np.ndarray:
    """Closed-form ``P`` with ``F^T P + P F = -ki I`` for the companion ``F``."""
    if not (ks > 0 and kd_eff > 0):
        raise GainError(f"closed-loop matrix not Hurwitz (ks={ks}, kd_eff={kd_eff})")
    if not ki > 0:
        raise GainError(f"ki must be positive, got {ki}")
    p12 = ki / (2.0 * ks)
    p22 = (ki + 2.0 * p12) / (2.0 * kd_eff)
    p11 = kd_eff * p12 + ks * p22
    return np.array([[p11, p12], [p12, p22]])


def are_solve(Ks, Kd_eff, Ki) -> np.ndarray:
    """Block ``P`` (2m x 2m) for the stacked state ``[e; e_dot]``.

    Coordinates decouple, so each 2x2 block is solved in closed form and
    scattered into the ``[[P11, P12], [P12, P22]]`` block layout.
    """
    ks = np.atleast_1d(np.asarray(Ks, dtype=float))
    m = ks.size
    kd = _diag("Kd_eff", Kd_eff, m)
    ki = _diag("Ki", Ki, m)
    p = np.zeros((2 * m, 2 * m))
    for j in range(m):
        blk = are_solve_scalar(ks[j], kd[j], ki[j])
        idx = (j, m + j)
        p[np.ix_(idx, idx)] = blk
    return p


def block_closed_loop(Ks, Kd_eff) -> np.ndarray:
    ks = np.atleast_1d(np.asarray(Ks, dtype=float))
    m = ks.size
    kd = _diag("Kd_eff", Kd_eff, m)
    eye = np.eye(m)
    return np.block([[np.zeros((m, m)), eye], [-np.diag(ks), -np.diag(kd)]])


def lyapunov_residual(F: np.ndarray, P: np.ndarray, Q: np.ndarray) -> float:
    return float(np.max(np.abs(F.T @ P + P @ F + Q)))


def robustness_margin(
    gains: TaskGains,
    P: np.ndarray,
    disturbance_bound: float,
    theta: float = 0.5,
    delta_max: float = 0.0,
    target_radius: float | None = None,
) -> StabilityReport:
    """Threshold radius and ultimate bound of the desired task state.

    ``threshold = 2 lmax(P) (|K| |eta_phi|_inf + delta_max) / (theta lmin(Ki))``
    with ``K = [Ks, Kd]`` and ``rho = sqrt(lmax(P)/lmin(P)) * threshold``.
    Scalar barrier gains go through the same computation (with ``Ki_h``), in
    which case ``rho`` is the barrier ultimate bound.

    Args:
        gains: task gains; ``Ki`` must be positive.
        P: solution of :func:`are_solve` for the same gains.
        disturbance_bound: estimate of the sup-norm of the Taylor remainder.
        theta: split between decay and disturbance domination, in (0, 1).
        delta_max: bound on the QP relaxation residual.
        target_radius: if given, ``margin_ok`` reports ``rho <= target_radius``.
    """
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if not (math.isfinite(disturbance_bound) and disturbance_bound >= 0):
        raise ValueError(f"disturbance bound must be finite and >= 0, got {disturbance_bound}")
    ki_min = float(np.min(gains.Ki))
    if not ki_min > 0:
        raise GainError("robustness margin needs Ki > 0")
    eig_p = np.linalg.eigvalsh(0.5 * (P + P.T))
    lmin, lmax = float(eig_p[0]), float(eig_p[-1])
    if not lmin > 0:
        raise GainError("P is not positive definite")
    k = np.hstack([np.diag(gains.Ks), np.diag(gains.Kd)])
    phi_inf = np.linalg.norm(k, 2) * disturbance_bound + delta_max
    threshold = 2.0 * lmax * phi_inf / (theta * ki_min)
    rho = math.sqrt(lmax / lmin) * threshold
    q = np.diag(np.concatenate([gains.Ki, gains.Ki]))
    f = block_closed_loop(gains.Ks, gains.kd_eff)
    ok = True if target_radius is None else bool(rho <= target_radius)
    return StabilityReport(P, q, np.linalg.eigvals(f), threshold, rho, ok)


def lyapunov_value(P: np.ndarray, eta_d: np.ndarray) -> float:
    return 0.5 * float(eta_d @ P @ eta_d)


# --- posture ---------------------------------------------------------------


def posture_feedback(Kp, Kv, q_hat, qd_hat, q_post) -> np.ndarray:
    """``kappa = Kp (q_hat - q_post) + Kv qd_hat`` for the regularizing task."""
    q_hat = np.asarray(q_hat, dtype=float)
    return np.asarray(Kp) * (q_hat - np.asarray(q_post, dtype=float)) + np.asarray(Kv) * np.asarray(
        qd_hat, dtype=float
    )
