import numpy as np
import pytest
from oracles import qp_grid_min, random_qp_instance

from biln.kmm import (
    FeasibilityError,
    JITTER,
    KernelSpec,
    KmmProblem,
    build_problem,
    default_eps,
    embedding_residual,
    solve,
)


def _random_points(rng, m, n, d=2):
    return rng.standard_normal((m, d)), rng.standard_normal((n, d))


def test_kernel_diagonal_and_symmetry():
    rng = np.random.default_rng(0)
    src, tgt = _random_points(rng, 25, 60)
    problem = build_problem(src, tgt, KernelSpec(1.0))
    assert np.allclose(np.diag(problem.K), 1.0 + JITTER, atol=0)
    assert np.max(np.abs(problem.K - problem.K.T)) <= 1e-12
    assert np.all(problem.kappa >= 0.0)


def test_kernel_unit_distance_value():
    spec = KernelSpec(1.0)
    value = spec.matrix(np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]))[0, 0]
    assert value == pytest.approx(0.36787944117144233, rel=1e-15)  # e^{-1}
    half = KernelSpec(0.5).matrix(np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]))[0, 0]
    assert half == pytest.approx(np.exp(-0.5), rel=1e-15)


def test_kappa_collapses_to_row_sums_when_sets_match():
    rng = np.random.default_rng(1)
    pts = rng.standard_normal((30, 2))
    problem = build_problem(pts, pts, KernelSpec(1.0))
    raw_k = problem.K - JITTER * np.eye(30)
    assert np.allclose(problem.kappa, raw_k.sum(axis=1), atol=1e-10)


def test_default_eps_values():
    assert default_eps(1) == 0.0
    assert default_eps(100) == pytest.approx(0.9, abs=0)
    assert default_eps(4) == pytest.approx(0.5, abs=0)


def test_m1_slab_pins_to_one():
    problem = KmmProblem(
        K=np.array([[1.0 + JITTER]]), kappa=np.array([1.0]), B=1000.0, eps=0.0
    )
    weights = solve(problem)
    assert weights.beta[0] == pytest.approx(1.0, abs=1e-10)


def test_m1_closed_form_clamp():
    rng = np.random.default_rng(2)
    for _ in range(25):
        k00 = float(rng.uniform(0.2, 2.0))
        kap = float(rng.uniform(0.0, 3.0))
        eps = float(rng.uniform(0.0, 0.9))
        B = float(rng.uniform(max(1.0 - eps, 0.1), 3.0))
        problem = KmmProblem(K=np.array([[k00]]), kappa=np.array([kap]), B=B, eps=eps)
        weights = solve(problem)
        lo, hi = max(0.0, 1.0 - eps), min(B, 1.0 + eps)
        oracle = min(max(kap / k00, lo), hi)
        assert weights.beta[0] == pytest.approx(oracle, abs=1e-6)


@pytest.mark.parametrize("m", [1, 2])
def test_grid_search_oracle(m):
    rng = np.random.default_rng(3 + m)
    for _ in range(10):
        K, kappa, B, eps = random_qp_instance(rng, m)
        problem = KmmProblem(K=K, kappa=kappa, B=B, eps=eps)
        weights = solve(problem)
        oracle = qp_grid_min(K, kappa, B, eps, resolution=1e-3)
        assert abs(weights.objective - oracle) <= 1e-6
        assert problem.objective(weights.beta) == pytest.approx(weights.objective, abs=1e-9)


def test_identical_source_target_gives_uniform_weights():
    rng = np.random.default_rng(6)
    pts = rng.standard_normal((40, 2))
    problem = build_problem(pts, pts, KernelSpec(1.0))
    weights = solve(problem)
    assert np.max(np.abs(weights.beta - 1.0)) < 1e-2


def test_output_feasibility():
    rng = np.random.default_rng(7)
    for _ in range(20):
        m = int(rng.integers(2, 60))
        src, tgt = _random_points(rng, m, int(rng.integers(m, 150)))
        problem = build_problem(src, tgt, KernelSpec(float(rng.uniform(0.1, 2.0))))
        weights = solve(problem)
        assert problem.box_violation(weights.beta) <= 1e-8
        assert problem.slab_violation(weights.beta) <= 1e-8
        assert weights.kkt_residual >= 0.0


def test_objective_trace_non_increasing():
    rng = np.random.default_rng(8)
    for _ in range(10):
        m = int(rng.integers(2, 50))
        src, tgt = _random_points(rng, m, 120)
        problem = build_problem(src, tgt, KernelSpec(1.0))
        weights = solve(problem)
        diffs = np.diff(weights.objective_trace)
        assert np.all(diffs <= 1e-9 * (1.0 + np.abs(weights.objective_trace[:-1])))


def test_solution_objective_no_worse_than_uniform_start():
    rng = np.random.default_rng(9)
    for _ in range(10):
        m = int(rng.integers(2, 50))
        src, tgt = _random_points(rng, m, 120)
        problem = build_problem(src, tgt, KernelSpec(1.0))
        weights = solve(problem)
        assert weights.objective <= problem.objective(np.ones(m)) + 1e-9


def test_embedding_residual_no_worse_than_uniform():
    rng = np.random.default_rng(10)
    for _ in range(5):
        m = int(rng.integers(3, 40))
        src, tgt = _random_points(rng, m, 100)
        spec = KernelSpec(1.0)
        problem = build_problem(src, tgt, spec)
        weights = solve(problem)
        solved = embedding_residual(src, tgt, spec, weights.beta)
        uniform = embedding_residual(src, tgt, spec, np.ones(m))
        assert solved <= uniform + 1e-9


def test_doubling_nonbinding_box_leaves_beta_unchanged():
    rng = np.random.default_rng(11)
    pts = rng.standard_normal((30, 2))
    base = build_problem(pts, pts, KernelSpec(1.0), B=1000.0)
    doubled = build_problem(pts, pts, KernelSpec(1.0), B=2000.0)
    a = solve(base)
    b = solve(doubled)
    assert np.max(a.beta) < 999.0  # box truly non-binding
    assert np.max(np.abs(a.beta - b.beta)) <= 1e-6


def test_infeasible_region_raises_before_iterating():
    problem = KmmProblem(
        K=np.array([[1.0]]), kappa=np.array([1.0]), B=0.05, eps=0.1
    )
    with pytest.raises(FeasibilityError):
        solve(problem)


def test_build_problem_validation():
    rng = np.random.default_rng(12)
    pts = rng.standard_normal((5, 2))
    with pytest.raises(ValueError):
        build_problem(np.empty((0, 2)), pts, KernelSpec(1.0))
    with pytest.raises(ValueError):
        build_problem(pts, np.empty((0, 2)), KernelSpec(1.0))
    with pytest.raises(ValueError):
        build_problem(pts, rng.standard_normal((4, 3)), KernelSpec(1.0))
    with pytest.raises(ValueError):
        KernelSpec(0.0)
    with pytest.raises(ValueError):
        build_problem(pts, pts, KernelSpec(1.0), B=-1.0)


def test_default_eps_used_when_not_given():
    rng = np.random.default_rng(13)
    pts = rng.standard_normal((16, 2))
    problem = build_problem(pts, pts, KernelSpec(1.0))
    assert problem.eps == pytest.approx(default_eps(16))
