import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustqp.control import ConstraintRow
from robustqp.qp import (
    EPS_REG,
    ActiveSetSolver,
    QpInfeasible,
    QpProblem,
    TaskTerm,
    assemble,
    enumerate_oracle,
    find_conflicting_rows,
    kkt_residual,
    solve,
)


def random_problem(seed: int, n_max: int = 6, k_max: int = 8) -> QpProblem:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(0, k_max + 1))
    m = rng.normal(size=(n, n))
    a = rng.normal(size=(k, n))
    u0 = rng.normal(size=n)
    return QpProblem(m @ m.T + 0.1 * np.eye(n), rng.normal(scale=3.0, size=n), a, a @ u0 + np.abs(rng.normal(size=k)))


def test_scalar_task():
    p = assemble([TaskTerm([[1.0]], [-2.5], 1.0)])
    assert p.H[0, 0] == pytest.approx(1.0 + EPS_REG)
    assert p.g[0] == pytest.approx(-2.5)
    assert solve(p).u_star[0] == pytest.approx(2.5, rel=1e-8)


def test_conflicting_tasks_weighted_average():
    w1, w2, mu1, mu2 = 2.0, 3.0, 1.0, -4.0
    p = assemble([TaskTerm([[1.0]], [-mu1], w1), TaskTerm([[1.0]], [-mu2], w2)])
    expected = (w1 * mu1 + w2 * mu2) / (w1 + w2 + EPS_REG)
    assert solve(p).u_star[0] == pytest.approx(expected, rel=1e-14)


def test_posture_only():
    kappa = np.array([0.2, -0.7])
    p = assemble([], posture=(np.eye(2), kappa, 1.0))
    np.testing.assert_allclose(solve(p).u_star, -kappa, rtol=1e-8)


def test_assemble_rejects_bad_weights():
    with pytest.raises(ValueError):
        assemble([TaskTerm([[1.0]], [0.0], 0.0)])
    with pytest.raises(ValueError):
        assemble([TaskTerm([[1.0]], [0.0], -1.0)])
    with pytest.raises(ValueError):
        assemble([TaskTerm([[1.0]], [0.0], 1.0)], posture=(np.eye(1), [0.0], 0.0))


def test_assemble_copies_rows():
    rows = [ConstraintRow(np.array([1.0, 0.0]), 0.5), ConstraintRow(np.array([0.0, -1.0]), 2.0)]
    p = assemble([TaskTerm(np.eye(2), [0.0, 0.0], 1.0)], rows=rows, row_names=("a", "b"))
    np.testing.assert_array_equal(p.A_in, [[1.0, 0.0], [0.0, -1.0]])
    np.testing.assert_array_equal(p.b_in, [0.5, 2.0])


def test_unconstrained_and_clipped():
    free = QpProblem([[2.0]], [-2.0], np.zeros((0, 1)), [])
    assert solve(free).u_star[0] == pytest.approx(1.0)

    clipped = QpProblem([[2.0]], [-2.0], [[1.0]], [0.5])
    sol = solve(clipped)
    assert sol.u_star[0] == pytest.approx(0.5)
    assert sol.active_set == (0,)
    assert sol.duals[0] == pytest.approx(1.0)
    assert kkt_residual(clipped, [0.5], [1.0]) <= 1e-12


def test_kkt_residual_examples():
    clipped = QpProblem([[2.0]], [-2.0], [[1.0]], [0.5])
    r = kkt_residual(clipped, [0.5 - 1e-3], [1.0])
    assert r == pytest.approx(2.0 * 1e-3, rel=1e-6)

    p = QpProblem([[3.0, 0.5], [0.5, 1.0]], [1.0, -2.0], [[1.0, 1.0]], [100.0])
    u = np.array([0.3, 0.1])
    assert kkt_residual(p, u, [0.0]) == pytest.approx(np.abs(p.H @ u + p.g).max())


@pytest.mark.parametrize("seed", range(200))
def test_matches_enumeration_oracle(seed):
    p = random_problem(seed)
    sol = solve(p)
    u_ref, active = enumerate_oracle(p)
    np.testing.assert_allclose(sol.u_star, u_ref, atol=1e-8)
    assert sol.kkt_residual <= 1e-8
    assert np.all(sol.duals >= -1e-10)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_warm_start_gives_same_solution(seed):
    p = random_problem(seed)
    cold = solve(p)
    rng = np.random.default_rng(seed + 1)
    guess = tuple(int(i) for i in rng.choice(max(p.k, 1), size=min(p.k, 2), replace=False)) if p.k else ()
    warm = solve(p, warm_start=guess)
    np.testing.assert_allclose(warm.u_star, cold.u_star, atol=1e-9)


def test_solver_object_reuses_active_set():
    p = QpProblem([[2.0]], [-2.0], [[1.0]], [0.5])
    solver = ActiveSetSolver()
    first = solver.solve(p)
    assert solver.last_active == (0,)
    second = solver.solve(p)
    assert second.iterations <= first.iterations
    np.testing.assert_array_equal(first.u_star, second.u_star)


@pytest.mark.parametrize("seed", range(20))
def test_inactive_row_leaves_solution_unchanged(seed):
    p = random_problem(seed)
    base = solve(p)
    rng = np.random.default_rng(seed)
    a = rng.normal(size=p.n)
    b = float(a @ base.u_star) + 1.0
    q = QpProblem(p.H, p.g, np.vstack([p.A_in, a]), np.append(p.b_in, b))
    np.testing.assert_allclose(solve(q).u_star, base.u_star, atol=1e-10)


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_weight_scaling_invariance(c):
    rng = np.random.default_rng(3)
    j1, j2 = rng.normal(size=(2, 3)), rng.normal(size=(1, 3))
    r1, r2 = rng.normal(size=2), rng.normal(size=1)
    rows = [ConstraintRow(np.array([1.0, 0.0, 0.0]), 0.1)]
    p1 = assemble([TaskTerm(j1, r1, 1.0), TaskTerm(j2, r2, 0.5)], rows=rows)
    pc = assemble([TaskTerm(j1, r1, c), TaskTerm(j2, r2, 0.5 * c)], rows=rows, eps_reg=c * EPS_REG)
    s1, sc = solve(p1), solve(pc)
    np.testing.assert_allclose(sc.u_star, s1.u_star, atol=1e-9)
    assert pc.objective(sc.u_star) == pytest.approx(c * p1.objective(s1.u_star), rel=1e-9)


def test_deterministic():
    p = random_problem(42)
    a, b = solve(p), solve(p)
    assert a.u_star.tobytes() == b.u_star.tobytes() and a.active_set == b.active_set


def test_infeasible_reports_irreducible_subset():
    a = np.array([[1.0], [-1.0], [1.0], [0.0]])
    b = np.array([0.0, -1.0, 5.0, 1.0])  # u <= 0 and u >= 1 conflict
    p = QpProblem([[1.0]], [0.0], a, b, row_names=("upper", "lower", "loose", "trivial"))
    with pytest.raises(QpInfeasible) as info:
        solve(p)
    assert info.value.conflicting_rows == (0, 1)
    assert "upper" in str(info.value) and "lower" in str(info.value)
    assert find_conflicting_rows(a, b) == [0, 1]


def test_problem_validation():
    with pytest.raises(ValueError):
        QpProblem([[1.0, 2.0], [0.0, 1.0]], [0.0, 0.0], np.zeros((0, 2)), [])
    with pytest.raises(ValueError):
        QpProblem(np.eye(2), [0.0, 0.0], np.zeros((2, 2)), [1.0])


def test_slack_per_task():
    p = assemble([TaskTerm([[1.0]], [-1.0], 1.0, "t")], rows=[ConstraintRow(np.array([1.0]), 0.25)])
    sol = solve(p)
    assert sol.slack_per_task[0][0] == pytest.approx(-0.75)
