import json

import numpy as np
import pytest

from horoent import formats
from horoent.sdp import LmiError, LmiProblem, SolverOptions, SolverStatus, certify, residuals, solve


def max_t_problem(f0_blocks, g_blocks):
    """maximize t  s.t.  F0_b + sum_i y_i G_i,b - t I >= 0; variables (y, t)."""
    n = g_blocks[0].shape[0] + 1
    c = np.zeros(n)
    c[-1] = 1.0
    coeffs = []
    for f0, g in zip(f0_blocks, g_blocks):
        m = f0.shape[0]
        coeffs.append(np.concatenate([g, -np.eye(m)[None]], axis=0))
    return LmiProblem(c, f0_blocks, coeffs)


def random_instance(seed=7, n=50, m=20, blocks=2):
    rng = np.random.default_rng(seed)
    f0s, gs = [], []
    for _ in range(blocks):
        f = rng.normal(size=(m, m))
        f0s.append((f + f.T) / 2)
        g = rng.normal(size=(n - 1, m, m))
        g = (g + g.transpose(0, 2, 1)) / 2
        g -= np.trace(g, axis1=1, axis2=2)[:, None, None] * np.eye(m) / m  # traceless keeps t bounded
        gs.append(g)
    return max_t_problem(f0s, gs)


def diag_problem():
    return LmiProblem([1.0], [np.diag([1.0, 2.0])], [-np.eye(2)[None]])


def offdiag_problem():
    fx = np.array([[0.0, 1.0], [1.0, 0.0]])
    return LmiProblem([0.0, 1.0], [np.eye(2)], [np.stack([fx, -np.eye(2)])])


def bisect_t(problem, y, lo=-1e3, hi=1e3, iters=200):
    """Largest t with F(y, t) >= 0, judged only by minimum eigenvalues."""
    def feasible(t):
        x = np.append(y, t)
        return all(np.linalg.eigvalsh(sb)[0] >= 0 for sb in problem.lmi(x))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if feasible(mid) else (lo, mid)
    return lo


# --- analytic instances -------------------------------------------------------

def test_diag_instance():
    p = diag_problem()
    sol = solve(p)
    assert sol.status is SolverStatus.OPTIMAL
    assert sol.x[0] == pytest.approx(1.0, abs=1e-8)
    r = certify(p, sol)
    assert max(r.primal, r.dual, r.dual_psd) <= 1e-10
    assert abs(r.gap) <= 1e-8
    # the dual concentrates on the smallest eigenvalue
    assert np.allclose(sol.z[0], np.diag([1.0, 0.0]), atol=1e-6)


def test_offdiag_instance():
    sol = solve(offdiag_problem())
    assert sol.status is SolverStatus.OPTIMAL
    assert sol.x[0] == pytest.approx(0.0, abs=1e-7)
    assert sol.x[1] == pytest.approx(1.0, abs=1e-8)
    r = sol.residuals
    assert r.primal <= 1e-8 and r.dual <= 1e-8 and abs(r.gap) <= 1e-8 * (1 + abs(sol.objective))


def test_multi_block_analytic():
    # t <= min over blocks of the smallest eigenvalue: 0.5
    p = max_t_problem([np.diag([3.0, 1.0, 2.0]), np.diag([0.5, 4.0])], [np.zeros((0, 3, 3)), np.zeros((0, 2, 2))])
    sol = solve(p)
    assert sol.status is SolverStatus.OPTIMAL
    assert sol.objective == pytest.approx(0.5, abs=1e-8)


def test_optimal_solution_invariants():
    p = random_instance(seed=3, n=12, m=6)
    sol = solve(p)
    assert sol.status is SolverStatus.OPTIMAL
    r = sol.residuals
    assert abs(r.gap) <= 1e-8 * (1 + abs(sol.objective))
    assert r.primal <= 1e-8 and r.dual <= 1e-8
    assert r.min_eig_dual >= -1e-9
    assert np.linalg.norm(p.adjoint(sol.z) + p.objective) <= 1e-8


# --- random instance against independent oracles ------------------------------

@pytest.fixture(scope="module")
def random_solution():
    p = random_instance()
    return p, solve(p)


def test_random_instance_residuals(random_solution):
    p, sol = random_solution
    assert p.n == 50 and p.block_sizes == [20, 20]
    assert sol.status is SolverStatus.OPTIMAL
    r = certify(p, sol)
    assert r.primal <= 1e-8 and r.dual <= 1e-8 and r.dual_psd <= 1e-8
    assert abs(r.gap) <= 1e-8 * (1 + abs(sol.objective))


def test_random_instance_bisection_sandwich(random_solution):
    p, sol = random_solution
    lower = bisect_t(p, sol.x[:-1])
    upper = sol.dual_objective  # any dual-feasible Z bounds t from above
    assert lower <= sol.objective + 1e-9
    assert upper >= sol.objective - 1e-9
    assert upper - lower <= 1e-4
    assert abs(sol.objective - lower) <= 1e-4


@pytest.mark.filterwarnings("ignore:Solution may be inaccurate")
def test_random_instance_matches_external_solver(random_solution):
    cp = pytest.importorskip("cvxpy")
    p, sol = random_solution
    x = cp.Variable(p.n)
    cons = []
    for f0, fi in zip(p.constants, p.coefficients):
        expr = f0 + sum(x[i] * fi[i] for i in range(p.n))
        cons.append((expr + expr.T) / 2 >> 0)
    prob = cp.Problem(cp.Maximize(p.objective @ x), cons)
    prob.solve(solver=cp.CLARABEL)
    assert prob.status in ("optimal", "optimal_inaccurate")
    assert sol.objective == pytest.approx(prob.value, abs=1e-4)


def test_weak_duality_every_iteration(random_solution):
    p, sol = random_solution
    assert sol.history
    for rec in sol.history:
        assert rec.dual_objective >= rec.primal_objective - 1e-9


def test_weak_duality_small_instances():
    for p in [diag_problem(), offdiag_problem(), random_instance(seed=11, n=8, m=5)]:
        for rec in solve(p).history:
            assert rec.dual_objective >= rec.primal_objective - 1e-9


def test_scaling_invariance():
    p = random_instance(seed=5, n=15, m=8)
    base = solve(p)
    scaled = solve(p.scaled(10.0))
    assert base.status is SolverStatus.OPTIMAL and scaled.status is SolverStatus.OPTIMAL
    assert scaled.objective == pytest.approx(10 * base.objective, rel=1e-7)


def test_deterministic_bits():
    p = random_instance(seed=9, n=20, m=10)
    a, b = solve(p), solve(p)
    assert a.x.tobytes() == b.x.tobytes()
    assert all(za.tobytes() == zb.tobytes() for za, zb in zip(a.z, b.z))
    assert [r.primal_objective for r in a.history] == [r.primal_objective for r in b.history]
    assert a.iterations == b.iterations


# --- certify ------------------------------------------------------------------

def test_certify_flags_corrupted_x():
    p = diag_problem()
    sol = solve(p)
    sol.x = np.array([2.0])
    r = certify(p, sol)
    assert r.primal == pytest.approx(1.0, abs=1e-12)
    assert not r.ok(1e-8, sol.objective)


def test_certify_zeroed_duals():
    p = offdiag_problem()
    sol = solve(p)
    sol.z = [np.zeros_like(zb) for zb in sol.z]
    r = certify(p, sol)
    assert r.dual == np.linalg.norm(p.objective)


def test_certify_is_deterministic():
    p = random_instance(seed=2, n=10, m=4)
    sol = solve(p)
    assert certify(p, sol) == certify(p, sol)
    assert residuals(p, sol.x, sol.z) == sol.residuals


# --- status and validation ----------------------------------------------------

def test_iteration_cap_reports_best_iterate():
    p = random_instance(seed=4, n=10, m=5)
    sol = solve(p, SolverOptions(max_iterations=2))
    assert sol.status is SolverStatus.MAX_ITERATIONS
    assert sol.iterations == 2
    assert np.all(np.isfinite(sol.x))


def test_problem_validation():
    with pytest.raises(LmiError):
        LmiProblem([1.0], [np.array([[1.0, 2.0], [0.0, 1.0]])], [-np.eye(2)[None]])
    with pytest.raises(LmiError):
        LmiProblem([1.0, 2.0], [np.eye(2)], [-np.eye(2)[None]])
    with pytest.raises(LmiError):
        LmiProblem([1.0], [], [])


def test_lmi_json_round_trip(tmp_path):
    p = random_instance(seed=1, n=6, m=3)
    path = tmp_path / "lmi.json"
    formats.dump(formats.lmi_to_json(p), path)
    q = formats.lmi_from_json(formats.load(path))
    assert np.array_equal(p.objective, q.objective)
    assert all(np.array_equal(a, b) for a, b in zip(p.constants, q.constants))
    assert all(np.array_equal(a, b) for a, b in zip(p.coefficients, q.coefficients))
    obj = formats.lmi_to_json(p)
    assert set(obj) == {"objective", "blocks"} and set(obj["blocks"][0]) == {"size", "F0", "Fi"}


def test_solution_json_round_trip():
    p = diag_problem()
    sol = solve(p)
    back = formats.solution_from_json(json.loads(json.dumps(formats.solution_to_json(sol))))
    assert back.x.tobytes() == sol.x.tobytes()
    assert back.status is sol.status and back.residuals == sol.residuals
    assert all(np.array_equal(a, b) for a, b in zip(back.z, sol.z))
