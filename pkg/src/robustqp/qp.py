"""Weighted multi-objective QP assembly and a dense primal active-set solver.

Problems have the form ``min 1/2 u^T H u + g^T u`` subject to ``A u <= b`` with
``H`` symmetric positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

EPS_REG = 1e-9
_MAX_ITER_FACTOR = 50


@dataclass(frozen=True, eq=False)
class TaskTerm:
    """Least-squares term ``w |J u + r|^2``; ``r`` is the task residual at ``u = 0``."""

    J: np.ndarray
    r: np.ndarray
    weight: float
    name: str = ""


@dataclass(frozen=True, eq=False)
class QpProblem:
    H: np.ndarray
    g: np.ndarray
    A_in: np.ndarray
    b_in: np.ndarray
    tasks: tuple[TaskTerm, ...] = ()
    row_names: tuple[str, ...] = ()

    def __post_init__(self):
        h = np.asarray(self.H, dtype=float)
        n = h.shape[0]
        if h.shape != (n, n) or np.abs(h - h.T).max() > 1e-12 * max(1.0, np.abs(h).max()):
            raise ValueError("H must be a symmetric square matrix")
        a = np.asarray(self.A_in, dtype=float).reshape(-1, n)
        b = np.asarray(self.b_in, dtype=float).reshape(-1)
        if a.shape[0] != b.size:
            raise ValueError(f"A_in has {a.shape[0]} rows, b_in has {b.size}")
        object.__setattr__(self, "H", 0.5 * (h + h.T))
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float).reshape(n))
        object.__setattr__(self, "A_in", a)
        object.__setattr__(self, "b_in", b)

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def k(self) -> int:
        return self.b_in.size

    def objective(self, u: np.ndarray) -> float:
        return float(0.5 * u @ self.H @ u + self.g @ u)


@dataclass(frozen=True, eq=False)
class QpSolution:
    u_star: np.ndarray
    active_set: tuple[int, ...]
    duals: np.ndarray
    kkt_residual: float
    slack_per_task: tuple[np.ndarray, ...] = field(default=())
    iterations: int = 0


class QpInfeasible(RuntimeError):
    """The inequality rows admit no common solution.

    Attributes:
        conflicting_rows: an irreducible subset of row indices that is
            infeasible on its own while every proper subset is feasible.
    """

    def __init__(self, conflicting_rows: Sequence[int], names: Sequence[str] = ()):
        self.conflicting_rows = tuple(int(i) for i in conflicting_rows)
        labels = [names[i] if i < len(names) and names[i] else f"row {i}" for i in self.conflicting_rows]
        super().__init__("QP infeasible; conflicting constraints: " + ", ".join(labels))


def assemble(
    tasks: Sequence[TaskTerm],
    posture: tuple[np.ndarray, np.ndarray, float] | None = None,
    rows: Sequence = (),
    n: int | None = None,
    eps_reg: float = EPS_REG,
    row_names: Sequence[str] = (),
) -> QpProblem:
    """Build ``H = sum w J^T J + w0 S^T S + eps I`` and ``g = sum w J^T r + w0 S^T kappa``.

    Args:
        tasks: task terms; weights must be non-negative.
        posture: optional ``(S, kappa, w0)`` regularizer with ``w0 > 0``.
        rows: constraint rows with attributes ``a`` and ``b``.
        n: decision dimension, needed only when it cannot be inferred.
    """
    if n is None:
        if tasks:
            n = np.atleast_2d(tasks[0].J).shape[1]
        elif posture is not None:
            n = np.atleast_2d(posture[0]).shape[1]
        else:
            raise ValueError("cannot infer the decision dimension without tasks or posture")
    h = np.zeros((n, n))
    g = np.zeros(n)
    total = 0.0
    norm_tasks = []
    for t in tasks:
        jac = np.atleast_2d(np.asarray(t.J, dtype=float))
        r = np.atleast_1d(np.asarray(t.r, dtype=float))
        if jac.shape != (r.size, n):
            raise ValueError(f"task {t.name!r}: J shape {jac.shape} does not match residual {r.size} x {n}")
        if not t.weight >= 0:
            raise ValueError(f"task {t.name!r}: weight must be >= 0, got {t.weight}")
        h += t.weight * jac.T @ jac
        g += t.weight * jac.T @ r
        total += t.weight
        norm_tasks.append(TaskTerm(jac, r, float(t.weight), t.name))
    if posture is not None:
        s, kappa, w0 = posture
        if not w0 > 0:
            raise ValueError(f"posture weight w0 must be > 0, got {w0}")
        s = np.atleast_2d(np.asarray(s, dtype=float))
        h += w0 * s.T @ s
        g += w0 * s.T @ np.asarray(kappa, dtype=float)
        total += w0
    if not total > 0:
        raise ValueError("all task weights are zero; the QP Hessian would be singular")
    h += eps_reg * np.eye(n)
    a = np.array([np.asarray(r.a, dtype=float).reshape(n) for r in rows]).reshape(-1, n)
    b = np.array([float(r.b) for r in rows])
    return QpProblem(h, g, a, b, tuple(norm_tasks), tuple(row_names))


def kkt_residual(p: QpProblem, u, duals) -> float:
    """Largest of the stationarity, primal, dual and complementarity violations (inf-norms)."""
    u = np.asarray(u, dtype=float)
    lam = np.asarray(duals, dtype=float).reshape(p.k)
    stat = p.H @ u + p.g + p.A_in.T @ lam
    res = [float(np.max(np.abs(stat))) if stat.size else 0.0]
    if p.k:
        slack = p.A_in @ u - p.b_in
        res.append(float(np.max(np.maximum(slack, 0.0))))
        res.append(float(np.max(np.maximum(-lam, 0.0))))
        res.append(float(np.max(np.abs(lam * slack))))
    return max(res)


def _eqp(h: np.ndarray, g: np.ndarray, a_w: np.ndarray, b_w: np.ndarray):
    """Solve ``min 1/2 u'Hu + g'u s.t. a_w u = b_w``; returns ``(u, lam)`` or None if singular."""
    n = h.shape[0]
    m = a_w.shape[0]
    if m == 0:
        return np.linalg.solve(h, -g), np.zeros(0)
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = h
    kkt[:n, n:] = a_w.T
    kkt[n:, :n] = a_w
    rhs = np.empty(n + m)
    rhs[:n] = -g
    rhs[n:] = b_w
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    return sol[:n], sol[n:]


def _independent(a_w: np.ndarray) -> bool:
    if a_w.shape[0] == 0:
        return True
    if a_w.shape[0] > a_w.shape[1]:
        return False
    if a_w.shape[0] == 1:
        return bool(np.abs(a_w).max() > 1e-10)
    s = np.linalg.svd(a_w, compute_uv=False)
    return s[-1] > 1e-10 * max(1.0, s[0])


def _phase1(a: np.ndarray, b: np.ndarray):
    """Minimise the worst violation ``t`` of ``a u - t <= b``; returns ``(u, t)``."""
    n = a.shape[1]
    c = np.zeros(n + 1)
    c[-1] = 1.0
    a_ub = np.hstack([a, -np.ones((a.shape[0], 1))])
    bounds = [(None, None)] * n + [(-1.0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"phase-1 LP failed: {res.message}")
    return res.x[:n], float(res.x[-1])


def _feas_tol(b: np.ndarray) -> float:
    return 1e-9 * max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)


def find_conflicting_rows(a: np.ndarray, b: np.ndarray) -> list[int]:
    """Deletion filter: shrink an infeasible row set to an irreducible one."""
    tol = _feas_tol(b)
    keep = list(range(b.size))
    for i in range(b.size):
        trial = [j for j in keep if j != i]
        if not trial:
            continue
        _, t = _phase1(a[trial], b[trial])
        if t > tol:
            keep = trial
    return keep


class ActiveSetSolver:
    """Primal active-set method with warm starts from the previous active set.

    One instance belongs to one control loop; it remembers the last active set
    and offers it as the starting working set for the next solve.
    """

    def __init__(self, tol: float = 1e-10, max_iter: int | None = None):
        self.tol = tol
        self.max_iter = max_iter
        self.last_active: tuple[int, ...] = ()

    def solve(self, p: QpProblem, warm_start: Sequence[int] | None = None) -> QpSolution:
        ws = self.last_active if warm_start is None else tuple(warm_start)
        sol = solve(p, warm_start=ws, tol=self.tol, max_iter=self.max_iter)
        self.last_active = sol.active_set
        return sol


def _initial_point(p: QpProblem, warm: Sequence[int], tol: float):
    a, b, h, g = p.A_in, p.b_in, p.H, p.g
    feas = _feas_tol(b)
    warm = sorted({int(i) for i in warm if 0 <= int(i) < p.k})
    if warm and _independent(a[warm]):
        out = _eqp(h, g, a[warm], b[warm])
        if out is not None and np.all(a @ out[0] - b <= feas):
            return out[0], list(warm), out[1]
    u = np.linalg.solve(h, -g)
    if p.k == 0 or np.all(a @ u - b <= feas):
        return u, [], np.zeros(0)
    u, t = _phase1(a, b)
    if t > feas:
        raise QpInfeasible(find_conflicting_rows(a, b), p.row_names)
    return u, [], None


def _finish(p: QpProblem, u: np.ndarray, work: list[int], lam_w: np.ndarray, iterations: int) -> QpSolution:
    duals = np.zeros(p.k)
    duals[work] = lam_w
    slack = tuple(t.J @ u + t.r for t in p.tasks)
    return QpSolution(u, tuple(work), duals, kkt_residual(p, u, duals), slack, iterations)


def solve(
    p: QpProblem,
    warm_start: Sequence[int] | None = None,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> QpSolution:
    """Global minimiser of a strictly convex QP.

    Ties in the blocking-constraint and multiplier tests go to the smallest
    row index, so the result depends only on the problem data and warm start.

    Raises:
        QpInfeasible: if the rows have no common solution; the exception names
            an irreducible conflicting subset.
    """
    a, b, h, g = p.A_in, p.b_in, p.H, p.g
    if p.k == 0:
        return _finish(p, np.linalg.solve(h, -g), [], np.zeros(0), 1)
    u, work, lam0 = _initial_point(p, warm_start or (), tol)
    # the warm-start point is already a vertex solution; accept it if its multipliers agree
    if lam0 is not None and (not work or lam0.min() >= -tol * max(1.0, float(np.max(np.abs(g))))):
        return _finish(p, u, work, lam0, 1)
    feas = _feas_tol(b)
    limit = max_iter or _MAX_ITER_FACTOR * (p.n + p.k + 1)
    lam_w = np.zeros(len(work))
    it = 0
    while True:
        it += 1
        if it > limit:
            raise RuntimeError(f"active-set iteration limit ({limit}) reached")
        grad = h @ u + g
        out = _eqp(h, grad, a[work], np.zeros(len(work)))
        if out is None:
            raise RuntimeError("working set became linearly dependent")
        step, lam_w = out
        scale = max(1.0, float(np.max(np.abs(u))))
        if np.max(np.abs(step), initial=0.0) <= tol * scale:
            if not work or lam_w.min() >= -tol * max(1.0, float(np.max(np.abs(grad)))):
                break
            drop = int(np.argmin(lam_w))
            work.pop(drop)
            continue
        alpha = 1.0
        block = -1
        ap = a @ step
        for i in range(p.k):
            if i in work or ap[i] <= 1e-14 * max(1.0, np.abs(a[i]).max() * np.abs(step).max()):
                continue
            ratio = max(b[i] - a[i] @ u, 0.0) / ap[i]
            if ratio < alpha:
                alpha = ratio
                block = i
        u = u + alpha * step
        if block >= 0:
            work.append(block)
            work.sort()

    # polish on the final working set
    out = _eqp(h, g, a[work], b[work])
    if out is not None and np.all(a @ out[0] - b <= feas):
        u, lam_w = out
    return _finish(p, u, work, lam_w, it)


def enumerate_oracle(p: QpProblem) -> tuple[np.ndarray, tuple[int, ...]]:
    """Brute-force minimiser by trying every active-set combination.

    Each subset with independent rows is solved as an equality-constrained
    KKT system; the feasible candidate with non-negative multipliers and the
    lowest objective wins.
    """
    from itertools import combinations

    a, b = p.A_in, p.b_in
    tol = 1e-9 * max(1.0, float(np.max(np.abs(b))) if p.k else 1.0)
    best = None
    for size in range(0, min(p.n, p.k) + 1):
        for subset in combinations(range(p.k), size):
            sub = list(subset)
            if not _independent(a[sub]):
                continue
            out = _eqp(p.H, p.g, a[sub], b[sub])
            if out is None:
                continue
            u, lam = out
            if p.k and np.any(a @ u - b > tol):
                continue
            if lam.size and lam.min() < -1e-9:
                continue
            val = p.objective(u)
            if best is None or val < best[0] - 1e-14:
                best = (val, u, tuple(sub))
    if best is None:
        raise QpInfeasible(find_conflicting_rows(a, b) if p.k else [])
    return best[1], best[2]
