import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conic_problems import UNIT_PROBLEMS, min_eig, pinned_trace
from hsvm_relax.conic import (
    ConeSpec,
    ConicProblem,
    ConicSolver,
    dump_problem,
    kkt_residuals,
    load_problem,
    project_cone,
    project_dual_cone,
    project_psd,
    smat,
    solve,
    svec,
    tri_size,
)

METHODS = ("admm", "ipm")


def test_svec_examples():
    np.testing.assert_array_equal(svec(np.eye(2)), [1, 0, 1])
    np.testing.assert_allclose(svec([[0, 1], [1, 0]]), [0, math.sqrt(2), 0], rtol=1e-15)
    # column-major lower triangle: (0,0), (1,0), (2,0), (1,1), (2,1), (2,2)
    M = np.array([[1.0, 2, 3], [2, 4, 5], [3, 5, 6]])
    s2 = math.sqrt(2)
    np.testing.assert_allclose(svec(M), [1, 2 * s2, 3 * s2, 4, 5 * s2, 6], rtol=1e-15)


def test_smat_roundtrip_examples():
    for M in (np.eye(2), np.array([[0.0, 1], [1, 0]]), np.array([[1.0, 2, 3], [2, 4, 5], [3, 5, 6]])):
        assert np.max(np.abs(smat(svec(M)) - M)) <= 1e-15


def test_smat_rejects_non_triangular():
    with pytest.raises(ValueError):
        smat(np.zeros(4))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_svec_preserves_inner_product(n, seed):
    rng = np.random.default_rng(seed)
    A, B = rng.standard_normal((2, n, n))
    A, B = A + A.T, B + B.T
    assert abs(np.sum(A * B) - svec(A) @ svec(B)) <= 1e-12 * max(1.0, np.abs(A).sum() * np.abs(B).max())
    assert np.max(np.abs(smat(svec(A)) - A)) <= 1e-15 * max(1.0, np.abs(A).max()) * 4


def test_project_psd_examples():
    P = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert np.max(np.abs(project_psd(P) - P)) <= 1e-12
    np.testing.assert_allclose(project_psd(np.diag([1.0, -1.0])), np.diag([1.0, 0.0]), atol=1e-15)


def test_project_psd_optimality():
    rng = np.random.default_rng(0)
    for _ in range(50):
        M = rng.standard_normal((5, 5))
        M = M + M.T
        P = project_psd(M)
        assert np.min(np.linalg.eigvalsh(P)) >= -1e-12
        assert abs(np.sum((P - M) * P)) <= 1e-8


def test_project_cone_blocks_and_idempotence():
    cones = ConeSpec(zero=2, nonneg=3, psd=(2, 3))
    rng = np.random.default_rng(1)
    s = rng.standard_normal(cones.dim)
    p = project_cone(s, cones)
    np.testing.assert_array_equal(p[:2], 0)
    np.testing.assert_array_equal(p[2:5], np.maximum(s[2:5], 0))
    np.testing.assert_allclose(p[5:8], svec(project_psd(smat(s[5:8]))), atol=1e-14)
    assert np.max(np.abs(project_cone(p, cones) - p)) <= 1e-10
    # the dual cone of the zero cone is the whole space
    np.testing.assert_array_equal(project_dual_cone(s, cones)[:2], s[:2])


def test_cone_dimension_formula():
    cones = ConeSpec(zero=1, nonneg=4, psd=(3, 4))
    assert cones.dim == 1 + 4 + 6 + 10
    with pytest.raises(ValueError):
        ConicProblem(np.zeros(2), sp.csc_matrix((5, 2)), np.zeros(5), cones)


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("name", sorted(UNIT_PROBLEMS))
def test_unit_problems(name, method):
    prob, opt = UNIT_PROBLEMS[name]()
    sol = solve(prob, eps=1e-8, method=method)
    assert sol.status == "optimal"
    assert abs(sol.objective - opt) <= 1e-6
    assert max(kkt_residuals(prob, sol)) <= 1e-7


@pytest.mark.parametrize("method", METHODS)
def test_min_eig_solution(method):
    prob, _ = min_eig()
    sol = solve(prob, eps=1e-9, method=method)
    np.testing.assert_allclose(smat(sol.x), np.diag([0.0, 1.0]), atol=1e-5)


@pytest.mark.parametrize("method", METHODS)
def test_pinned_trace_solution(method):
    prob, _ = pinned_trace()
    sol = solve(prob, eps=1e-9, method=method)
    np.testing.assert_allclose(smat(sol.x), [[1.0, 0.0], [0.0, 0.0]], atol=1e-5)


def test_nonneg_scalar_default_eps():
    prob, _ = UNIT_PROBLEMS["nonneg_scalar"]()
    sol = solve(prob)
    assert sol.status == "optimal"
    assert abs(sol.x[0]) <= 1e-6 and abs(sol.objective) <= 1e-6


@pytest.mark.parametrize("method", METHODS)
def test_determinism(method):
    prob, _ = min_eig()
    a = solve(prob, eps=1e-8, method=method)
    b = solve(prob, eps=1e-8, method=method)
    assert a.iters == b.iters
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)


def test_max_iters_returns_best_iterate():
    prob, _ = UNIT_PROBLEMS["mixed_sdp"]()
    sol = solve(prob, eps=1e-14, max_iters=20)
    assert sol.status == "max_iters"
    assert sol.iters <= 20
    assert np.all(np.isfinite(sol.x))


def test_empty_problem_rejected():
    prob = ConicProblem(np.zeros(0), sp.csc_matrix((0, 0)), np.zeros(0), ConeSpec())
    for method in METHODS:
        with pytest.raises(ValueError):
            solve(prob, method=method)
    with pytest.raises(ValueError):
        solve(min_eig()[0], method="simplex")


def test_primal_infeasible_certificate():
    # x >= 1 and x <= 0
    A = sp.csc_matrix([[-1.0], [1.0]])
    prob = ConicProblem([1.0], A, [-1.0, 0.0], ConeSpec(nonneg=2))
    sol = solve(prob, eps=1e-8)
    assert sol.status == "primal_infeasible_cert"


def test_dual_infeasible_certificate():
    # min -x s.t. x >= 0 is unbounded below
    prob = ConicProblem([-1.0], sp.csc_matrix([[-1.0]]), [0.0], ConeSpec(nonneg=1))
    sol = solve(prob, eps=1e-8)
    assert sol.status == "dual_infeasible_cert"


def _random_sdp(rng, n=4, m=3):
    """min <C, X> s.t. <A_i, X> = b_i, X psd with C positive definite (bounded)."""
    k = tri_size(n)
    G = rng.standard_normal((n, n))
    C = G @ G.T + np.eye(n)
    X0 = project_psd(rng.standard_normal((n, n))) + np.eye(n)
    rows = [svec(M + M.T) for M in rng.standard_normal((m, n, n))]
    b = np.array([r @ svec(X0) for r in rows])
    A = sp.vstack([sp.csc_matrix(np.array(rows)), -sp.identity(k)]).tocsc()
    prob = ConicProblem(svec(C), A, np.concatenate([b, np.zeros(k)]), ConeSpec(zero=m, psd=(n,)))
    return prob, svec(X0)


@pytest.mark.parametrize("method", METHODS)
def test_lower_bound_sanity(method):
    rng = np.random.default_rng(3)
    for _ in range(5):
        prob, xf = _random_sdp(rng)
        sol = solve(prob, eps=1e-8, method=method)
        assert sol.status == "optimal"
        fx = prob.c @ xf
        assert sol.objective <= fx + 1e-8 * (1 + abs(fx))


def test_admm_and_ipm_agree():
    rng = np.random.default_rng(4)
    for _ in range(5):
        prob, _ = _random_sdp(rng, n=5, m=4)
        a = solve(prob, eps=1e-8, method="admm")
        b = solve(prob, eps=1e-8, method="ipm")
        assert abs(a.objective - b.objective) <= 1e-6 * (1 + abs(b.objective))


def test_against_cvxpy():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(5)
    for _ in range(3):
        prob, _ = _random_sdp(rng, n=4, m=3)
        k, m = tri_size(4), 3
        x = cp.Variable(k)
        A = prob.A.toarray()
        cons = [A[:m] @ x == prob.b[:m]]
        X = cp.Variable((4, 4), symmetric=True)
        r, c = np.tril_indices(4)
        order = np.lexsort((r, c))  # column-major lower triangle
        r, c = r[order], c[order]
        scale = np.where(r == c, 1.0, math.sqrt(2))
        cons += [X >> 0] + [x[i] == scale[i] * X[r[i], c[i]] for i in range(k)]
        val = cp.Problem(cp.Minimize(prob.c @ x), cons).solve(solver=cp.CLARABEL)
        sol = solve(prob, eps=1e-8, method="ipm")
        assert abs(sol.objective - val) <= 1e-6 * (1 + abs(val))


def test_reusable_workspace():
    prob, opt = min_eig()
    ws = ConicSolver(prob)
    a = ws.solve(eps=1e-8)
    b = ws.solve(eps=1e-8)
    assert a.iters == b.iters and abs(a.objective - opt) <= 1e-6


def test_dump_load_roundtrip(tmp_path):
    prob, _ = UNIT_PROBLEMS["small_lp"]()
    path = tmp_path / "p.txt"
    dump_problem(prob, path)
    back = load_problem(path)
    assert back.cones == prob.cones
    np.testing.assert_array_equal(back.A.toarray(), prob.A.toarray())
    np.testing.assert_array_equal(back.b, prob.b)
    np.testing.assert_array_equal(back.c, prob.c)
