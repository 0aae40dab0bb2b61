import numpy as np
import pytest

from fxtadapt.errors import QPError
from fxtadapt.qp import Multipliers, QuadraticProgram, kkt_residual, solve


def _random_feasible_qp(rng, d, k):
    B = rng.normal(size=(d, d))
    H = B @ B.T + 0.5 * np.eye(d)
    c = rng.normal(size=d) * 3.0
    A = rng.normal(size=(k, d))
    A /= np.maximum(np.linalg.norm(A, axis=1, keepdims=True), 1e-12)
    w0 = rng.normal(size=d)
    b = A @ w0 + rng.uniform(0.0, 1.0, size=k)
    lb = w0 - rng.uniform(0.5, 2.0, size=d)
    ub = w0 + rng.uniform(0.5, 2.0, size=d)
    return QuadraticProgram(H=H, c=c, A=A, b=b, lb=lb, ub=ub)


def _dual_projected_gradient(qps, k_max=12, iterations=30000):
    """Restarted accelerated projected gradient on the duals of same-size QPs.

    Each dual value is a lower bound on that problem's optimum.
    """
    Ms, rs, consts = [], [], []
    for qp in qps:
        d, pad = qp.d, k_max - qp.k
        G = np.vstack([qp.A, np.zeros((pad, d)), -np.eye(d), np.eye(d)])
        h = np.concatenate([qp.b, np.ones(pad), -qp.lb, qp.ub])
        H_inv = np.linalg.inv(qp.H)
        Ms.append(G @ H_inv @ G.T)
        rs.append(G @ H_inv @ qp.c + h)
        consts.append(-0.5 * qp.c @ H_inv @ qp.c)
    M, r, const = np.array(Ms), np.array(rs), np.array(consts)
    step = 1.0 / np.linalg.eigvalsh(M)[:, -1]

    lam = np.zeros_like(r)
    y = lam.copy()
    t = np.ones(len(r))
    for _ in range(iterations):
        grad = np.einsum("bij,bj->bi", M, y) + r
        nxt = np.maximum(y - step[:, None] * grad, 0.0)
        restart = np.einsum("bi,bi->b", y - nxt, nxt - lam) > 0.0
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = np.where(restart, 0.0, (t - 1.0) / t_next)
        t = np.where(restart, 1.0, t_next)
        y = nxt + beta[:, None] * (nxt - lam)
        lam = nxt
    q = 0.5 * np.einsum("bi,bij,bj->b", lam, M, lam) + np.einsum("bi,bi->b", lam, r)
    return const - q


def test_unconstrained_minimum_inside_box():
    qp = QuadraticProgram(H=np.eye(2), c=np.zeros(2), A=np.zeros((0, 2)), b=np.zeros(0),
                          lb=-np.ones(2), ub=np.ones(2))
    sol = solve(qp)
    assert sol.ok
    assert np.allclose(sol.w_star, 0.0)
    assert sol.objective == 0.0
    assert sol.active_set == ()
    assert sol.kkt_residual <= 1e-10


def test_single_active_row():
    qp = QuadraticProgram(H=np.eye(1), c=np.zeros(1), A=[[-1.0]], b=[-1.0],
                          lb=[-np.inf], ub=[np.inf])
    sol = solve(qp)
    assert sol.ok
    assert sol.w_star[0] == pytest.approx(1.0)
    assert sol.active_set == (0,)
    assert sol.multipliers.rows[0] == pytest.approx(1.0)
    assert sol.kkt_residual <= 1e-10


def test_infeasible_row_against_bound():
    qp = QuadraticProgram(H=np.eye(1), c=np.zeros(1), A=[[1.0]], b=[-1.0], lb=[0.0], ub=[np.inf])
    sol = solve(qp)
    assert sol.status == "infeasible"
    assert not sol.ok


def test_random_instances_match_dual_oracle():
    rng = np.random.default_rng(7)
    by_dim = {}
    for _ in range(500):
        d = int(rng.integers(1, 7))
        k = int(rng.integers(0, 13))
        by_dim.setdefault(d, []).append(_random_feasible_qp(rng, d, k))
    assert sum(len(qps) for qps in by_dim.values()) == 500

    for qps in by_dim.values():
        lower = _dual_projected_gradient(qps)
        for qp, bound in zip(qps, lower):
            sol = solve(qp)
            assert sol.ok
            assert sol.kkt_residual <= 1e-6
            assert np.all(qp.A @ sol.w_star <= qp.b + 1e-8)
            assert np.all(sol.w_star >= qp.lb - 1e-8) and np.all(sol.w_star <= qp.ub + 1e-8)
            tol = 1e-5 * max(1.0, abs(sol.objective))
            assert bound <= sol.objective + tol
            assert sol.objective - bound <= tol


def test_box_only_matches_projected_gradient():
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = int(rng.integers(1, 5))
        B = rng.normal(size=(d, d)) * 0.3
        H = B @ B.T + np.eye(d)
        c = rng.normal(size=d) * 4.0
        lb, ub = -np.ones(d), np.ones(d)
        qp = QuadraticProgram(H=H, c=c, A=np.zeros((0, d)), b=np.zeros(0), lb=lb, ub=ub)
        step = 1.0 / np.linalg.eigvalsh(H)[-1]
        w = np.zeros(d)
        for _ in range(5000):
            w = np.clip(w - step * (H @ w + c), lb, ub)
        sol = solve(qp)
        assert sol.objective == pytest.approx(qp.objective(w), rel=1e-5, abs=1e-9)


def test_deterministic_across_repeats():
    rng = np.random.default_rng(11)
    qp = _random_feasible_qp(rng, 5, 8)
    first = solve(qp)
    for _ in range(5):
        again = solve(qp)
        assert np.array_equal(first.w_star, again.w_star)
        assert first.working_set == again.working_set


def test_cost_scaling_leaves_minimizer_unchanged():
    rng = np.random.default_rng(5)
    for _ in range(20):
        qp = _random_feasible_qp(rng, 4, 5)
        scaled = QuadraticProgram(H=3.7 * qp.H, c=3.7 * qp.c, A=qp.A, b=qp.b, lb=qp.lb, ub=qp.ub)
        assert np.allclose(solve(qp).w_star, solve(scaled).w_star, atol=1e-8)


def test_warm_start_reaches_same_solution():
    rng = np.random.default_rng(9)
    qp = _random_feasible_qp(rng, 5, 10)
    cold = solve(qp)
    warm = solve(qp, warm_start=cold.working_set)
    assert np.allclose(cold.w_star, warm.w_star, atol=1e-10)


def test_kkt_residual_detects_perturbation():
    qp = QuadraticProgram(H=np.eye(2), c=np.zeros(2), A=np.zeros((0, 2)), b=np.zeros(0),
                          lb=-np.ones(2), ub=np.ones(2))
    zero = Multipliers.zeros(qp)
    assert kkt_residual(qp, np.zeros(2), zero) <= 1e-10
    assert kkt_residual(qp, np.array([1e-3, 0.0]), zero) >= 1e-4


def test_kkt_residual_unconstrained_is_gradient_norm():
    qp = QuadraticProgram(H=np.diag([2.0, 1.0]), c=np.array([1.0, -1.0]), A=np.zeros((0, 2)),
                          b=np.zeros(0), lb=[-np.inf, -np.inf], ub=[np.inf, np.inf])
    w = np.array([0.3, 0.2])
    expected = np.max(np.abs(qp.H @ w + qp.c))
    assert kkt_residual(qp, w, Multipliers.zeros(qp)) == pytest.approx(expected)


def _two_bound_problem():
    # unconstrained minimizer (10, 10) violates both upper bounds
    return QuadraticProgram(H=np.eye(2), c=np.array([-10.0, -10.0]), A=np.zeros((0, 2)), b=np.zeros(0),
                            lb=-np.ones(2), ub=np.ones(2))


def test_iteration_cap_reports_max_iterations():
    qp = _two_bound_problem()
    assert solve(qp, max_iter=0).status == "max-iterations"
    capped = solve(qp, max_iter=1)
    assert capped.status == "max-iterations"
    assert not capped.ok
    assert solve(qp).ok


def test_dual_iteration_adds_one_violated_constraint_at_a_time():
    qp = _two_bound_problem()
    sol = solve(qp)
    assert sol.iterations == 2
    assert np.allclose(sol.w_star, [1.0, 1.0])
    assert sorted(sol.working_set) == [2, 3]
    assert np.allclose(sol.multipliers.upper, [9.0, 9.0])

    inside = QuadraticProgram(H=np.eye(2), c=np.array([-0.5, 0.2]), A=np.zeros((0, 2)), b=np.zeros(0),
                              lb=-np.ones(2), ub=np.ones(2))
    free = solve(inside)
    assert free.iterations == 0
    assert free.working_set == ()
    assert np.allclose(free.w_star, [0.5, -0.2])


@pytest.mark.parametrize(
    "H, lb, ub",
    [
        (np.array([[1.0, 2.0], [0.0, 1.0]]), -np.ones(2), np.ones(2)),
        (np.array([[-1.0, 0.0], [0.0, 1.0]]), -np.ones(2), np.ones(2)),
        (np.eye(2), np.ones(2), -np.ones(2)),
    ],
)
def test_malformed_problems_rejected(H, lb, ub):
    with pytest.raises(QPError):
        QuadraticProgram(H=H, c=np.zeros(2), A=np.zeros((0, 2)), b=np.zeros(0), lb=lb, ub=ub)
