"""Acceptance criteria shared by ``robustqp check`` and the test suite.

Every criterion returns a :class:`CriterionResult` with a verdict and a short
detail string of the measured quantities.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import control, scenarios
from .control import BarrierGains, BarrierPsi, TaskGains, TaskPsi
from .kinematics import BarrierState, PlanarChain, TaskState, fk, jacobian, jacobian_dot
from .qp import QpProblem, enumerate_oracle, solve
from .sim import compute_metrics, run_scenario, scenario_metrics

SEED = 20240501


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float | None = None

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        budget = f" (budget {self.budget:g} s)" if self.budget else ""
        return f"[{verdict}] {self.number:2d} {self.name}: {self.detail} [{self.elapsed:.1f} s{budget}]"


def _timed(number: int, name: str, budget: float | None, fn: Callable[[], tuple[bool, str]]) -> CriterionResult:
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    if budget is not None and elapsed > budget:
        ok = False
        detail += f"; runtime {elapsed:.1f} s over budget"
    return CriterionResult(number, name, bool(ok), detail, elapsed, budget)


# --- 1-DoF simulations -----------------------------------------------------


def output_feedback_split() -> CriterionResult:
    def body():
        left = scenario_metrics(scenarios.builtin("fig4-left"))
        right = scenario_metrics(scenarios.builtin("fig4-right"))
        ok = (
            left.steady_state_error <= 0.02
            and left.oscillation_index < 0.5
            and not left.instability_flag
            and right.instability_flag
        )
        return ok, (
            f"Ks=10 |e(10)|={left.steady_state_error:.4f} osc={left.oscillation_index:.3f}; "
            f"Ks=30 flag={right.instability_flag} osc={right.oscillation_index:.3f}"
        )

    return _timed(1, "output-feedback stability split", 5.0, body)


def heterogeneous_sweep() -> CriterionResult:
    def body():
        m = {e: scenario_metrics(scenarios.fig8(e)) for e in (0.01, 1.0, 2.0)}
        ok = m[0.01].oscillation_index >= 0.95
        for e in (1.0, 2.0):
            ok = ok and not m[e].instability_flag and m[e].steady_state_error <= 0.07
        ok = ok and m[2.0].settling_time > m[1.0].settling_time
        return ok, (
            f"eps=0.01 osc={m[0.01].oscillation_index:.3f}; "
            f"eps=1 |e|={m[1.0].steady_state_error:.2e} ts={m[1.0].settling_time:.2f}; "
            f"eps=2 |e|={m[2.0].steady_state_error:.2e} ts={m[2.0].settling_time:.2f}"
        )

    return _timed(2, "heterogeneous gain sweep", 10.0, body)


def onset_correlation(log, t_on: float = 10.0, span: float = 0.5) -> float:
    """Mean of ``qd_d * qd`` over ``[t_on, t_on + span]`` (uncentred, sign-bearing)."""
    t = log.t
    sel = (t >= t_on - 1e-12) & (t <= t_on + span + 1e-12)
    return float(np.mean(log.column("qd_d_0")[sel] * log.column("qd_hat_0")[sel]))


def decay_ratio(log, t_on: float = 10.0, span: float = 1.0) -> float:
    """Peak ``|qd_d|`` over the last ``span`` seconds relative to the first ``span`` after onset."""
    t, v = log.t, np.abs(log.column("qd_d_0"))
    early = v[(t >= t_on) & (t < t_on + span)].max()
    late = v[t >= t[-1] - span].max()
    return float(late / early)


def compliance_variant() -> CriterionResult:
    def body():
        log_a = run_scenario(scenarios.builtin("fig10-a"))
        log_b = run_scenario(scenarios.builtin("fig10-b"))
        ca, cb = onset_correlation(log_a), onset_correlation(log_b)
        da, db = decay_ratio(log_a), decay_ratio(log_b)
        ok = cb > 0 and ca < 0 and da <= 0.5 and db <= 0.5
        return ok, f"corr(b)={cb:+.2e} corr(a)={ca:+.2e}; |qd_d| envelope ratio a={da:.2e} b={db:.2f}"

    return _timed(3, "compliance variant", None, body)


def ecbf_modes() -> CriterionResult:
    def body():
        ff_log = run_scenario(scenarios.builtin("fig7-ffwd"))
        ff = compute_metrics(ff_log)
        fb = scenario_metrics(scenarios.builtin("fig7-fb"))
        over = ff.overshoot_beyond_boundary[0]
        hd_min = float(np.min(ff_log.column("barrier0_hd")))
        ok = 0.008 <= over <= 0.012 and hd_min >= -1e-6 and fb.oscillation_index >= 0.95
        return ok, f"feedforward max(-h)={over:.5f} min(h_d)={hd_min:.1e}; feedback osc={fb.oscillation_index:.3f}"

    return _timed(4, "ECBF mode comparison", 10.0, body)


def recbf_sweep() -> CriterionResult:
    def body():
        m = {e: scenario_metrics(scenarios.fig12(e)) for e in (0.02, 2.0, 5.0)}
        ok = (
            m[0.02].oscillation_index >= 0.95
            and m[2.0].oscillation_index < 0.95
            and m[2.0].overshoot_beyond_boundary[0] <= 0.02
            and not m[5.0].instability_flag
            and m[5.0].oscillation_index < 0.95
            and m[5.0].time_to_boundary[0] > m[2.0].time_to_boundary[0]
        )
        return ok, (
            f"eps=0.02 osc={m[0.02].oscillation_index:.3f}; eps=2 osc={m[2.0].oscillation_index:.3f} "
            f"max(-h)={m[2.0].overshoot_beyond_boundary[0]:.4f} ttb={m[2.0].time_to_boundary[0]:.3f}; "
            f"eps=5 osc={m[5.0].oscillation_index:.3f} ttb={m[5.0].time_to_boundary[0]:.3f}"
        )

    return _timed(5, "RECBF sweep", 10.0, body)


# --- algebraic suites ------------------------------------------------------


def random_feasible_qp(rng: np.random.Generator) -> QpProblem:
    n = int(rng.integers(1, 7))
    k = int(rng.integers(0, 9))
    m = rng.normal(size=(n, n))
    h = m @ m.T + 0.1 * np.eye(n)
    g = rng.normal(scale=3.0, size=n)
    a = rng.normal(size=(k, n))
    u0 = rng.normal(size=n)
    b = a @ u0 + np.abs(rng.normal(size=k))
    return QpProblem(h, g, a, b)


def qp_oracle(count: int = 100, seed: int = SEED) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        worst_gap = worst_kkt = 0.0
        for _ in range(count):
            p = random_feasible_qp(rng)
            sol = solve(p)
            u_ref, _ = enumerate_oracle(p)
            worst_gap = max(worst_gap, float(np.linalg.norm(sol.u_star - u_ref)))
            worst_kkt = max(worst_kkt, sol.kkt_residual)
        ok = worst_gap <= 1e-8 and worst_kkt <= 1e-8
        return ok, f"{count} QPs, max |u-u_oracle|={worst_gap:.1e}, max KKT={worst_kkt:.1e}"

    return _timed(6, "QP oracle equivalence", 60.0, body)


def lyapunov_suite(count: int = 50, seed: int = SEED) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        worst_sym = worst_res = 0.0
        min_eig = math.inf
        for _ in range(count):
            ks, kd, ki = rng.uniform(0.1, 50.0, size=3)
            p = control.are_solve(ks, kd, ki)
            f = control.closed_loop_matrix(ks, kd)
            worst_sym = max(worst_sym, float(np.max(np.abs(p - p.T))))
            worst_res = max(worst_res, control.lyapunov_residual(f, p, ki * np.eye(2)))
            min_eig = min(min_eig, float(np.linalg.eigvalsh(p)[0]))
        hand = control.are_solve(1.0, 2.0, 1.0)
        hand_err = float(np.max(np.abs(hand - np.array([[1.5, 0.5], [0.5, 0.5]]))))
        ok = worst_sym <= 1e-12 and min_eig > 0 and worst_res <= 1e-10 and hand_err <= 1e-12
        return ok, (
            f"{count} triples, sym={worst_sym:.1e} residual={worst_res:.1e} "
            f"min eig={min_eig:.2e}; hand case err={hand_err:.1e}"
        )

    return _timed(7, "ARE/Lyapunov suite", 5.0, body)


def recovery_identities(count: int = 1000, seed: int = SEED) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        bad_mu = bad_row = 0
        for _ in range(count):
            m = int(rng.integers(1, 4))
            ks, kd = rng.uniform(0.0, 100.0, m), rng.uniform(-50.0, 50.0, m)
            e, ed, edd = (rng.normal(scale=5.0, size=m) for _ in range(3))
            ref = control.mu_output_feedback(ks, kd, TaskState(e, ed))
            het = control.mu_heterogeneous(TaskGains(ks, kd, np.zeros(m)), TaskPsi(e, ed, edd))
            bad_mu += not np.array_equal(ref, het)

            n = int(rng.integers(1, 5))
            jac, jdot, alpha = rng.normal(size=n), rng.normal(size=n), rng.normal(size=n)
            h, hd, hdd = rng.normal(size=3)
            g = BarrierGains(float(rng.uniform(0, 100)), float(rng.uniform(0, 50)), 0.0)
            r1 = control.ecbf_row_feedback(g, BarrierState(h, hd), jac, jdot, alpha)
            r2 = control.recbf_row(g, BarrierPsi(h, hd, hdd), jac, jdot, alpha)
            bad_row += not (np.array_equal(r1.a, r2.a) and r1.b == r2.b)
        return bad_mu == 0 and bad_row == 0, f"{count} inputs, mismatches: mu={bad_mu} row={bad_row}"

    return _timed(8, "recovery identities", None, body)


def kinematics_fd(count: int = 200, seed: int = SEED) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        eps = 1e-7
        worst_j = worst_jd = 0.0
        for links in ((1.0, 0.8), (0.6, 0.5, 0.4)):
            chain = PlanarChain(links)
            n = chain.dof
            for _ in range(count):
                q = rng.uniform(-math.pi, math.pi, n)
                d = rng.normal(size=n)
                d /= np.linalg.norm(d)
                fd = (fk(chain, q + eps * d) - fk(chain, q)) / eps
                worst_j = max(worst_j, float(np.linalg.norm(fd - jacobian(chain, q) @ d)))
                qd = rng.normal(size=n)
                fd_j = (jacobian(chain, q + qd * eps) - jacobian(chain, q)) / eps
                worst_jd = max(worst_jd, float(np.max(np.abs(fd_j - jacobian_dot(chain, q, qd)))))
        ok = worst_j <= 1e-6 and worst_jd <= 1e-5
        return ok, f"2- and 3-link x {count}: J err={worst_j:.1e}, Jdot err={worst_jd:.1e}"

    return _timed(9, "kinematics finite differences", None, body)


def planar_gain_ramp() -> CriterionResult:
    def body():
        plain = scenario_metrics(scenarios.builtin("planar-gain-ramp"))
        robust_s = scenarios.builtin("planar-gain-ramp-robust")
        robust_log = run_scenario(robust_s)
        robust = compute_metrics(robust_log, robust_s.osc_window)
        episodes = len(robust_log.segments) - 1
        ok = (
            plain.instability_flag
            and plain.first_unstable_segment is not None
            and not robust.instability_flag
            and not robust_log.blowup
            and len(robust.segment_flags) == episodes
        )
        ks = None
        if plain.first_unstable_segment is not None:
            ks = 400.0 + 50.0 * plain.first_unstable_segment
        return ok, (
            f"output feedback flagged at episode {plain.first_unstable_segment} (Ks={ks}); "
            f"heterogeneous eps=1 completed {len(robust.segment_flags)}/{episodes} episodes, "
            f"flag={robust.instability_flag}"
        )

    return _timed(10, "planar gain-ramp ordering", None, body)


def comparison_lemma() -> CriterionResult:
    def body():
        s = scenarios.comparison_lemma()
        log = run_scenario(s)
        hd = log.column("barrier0_hd")
        hdd = log.column("barrier0_hdotd")
        b = s.barriers[0]
        bound = control.comparison_bound(b.Ks_h, b.Kd_h, hd[0], hdd[0], log.t)
        gap = float(np.max(bound - hd))
        active = int(np.min(log.column("barrier0_active")))
        return gap <= 1e-6 and active == 1, f"max(bound - h_d)={gap:.2e} over {len(log)} samples (dt={s.dt:g})"

    return _timed(11, "comparison-lemma bound", None, body)


CRITERIA = {
    1: output_feedback_split,
    2: heterogeneous_sweep,
    3: compliance_variant,
    4: ecbf_modes,
    5: recbf_sweep,
    6: qp_oracle,
    7: lyapunov_suite,
    8: recovery_identities,
    9: kinematics_fd,
    10: planar_gain_ramp,
    11: comparison_lemma,
}

SUITES = {
    "1dof": (1, 2, 3, 4, 5, 11),
    "qp-oracle": (6,),
    "lyapunov": (7,),
    "recovery": (8,),
    "kinematics": (9,),
    "planar": (10,),
    "all": tuple(CRITERIA),
}


def run_suite(name: str, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    results = []
    for number in SUITES[name]:
        res = CRITERIA[number]()
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
