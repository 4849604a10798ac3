import math

import numpy as np
import pytest

from robustwidth.geometry import lp_norm
from robustwidth.sensing import RngStream, gen_gaussian_matrix, gen_sparse_signal
from robustwidth.solver import (
    InfeasibleProblemError,
    SolverConfig,
    decode,
    decode_identity_closed_form,
    residual_lp,
)
from robustwidth.types import RecoveryProblem, SenseMatrix


def _identity_problem(y, eps, p):
    return RecoveryProblem(
        matrix=SenseMatrix(np.eye(len(y))),
        observations=np.asarray(y, dtype=float),
        noise_level=eps,
        p=p,
    )


def test_identity_zero_noise_returns_observations():
    y = np.array([0.5, -2.0, 1.5, 0.0])
    for p in (1.0, 2.0, math.inf):
        result = decode(_identity_problem(y, 0.0, p))
        assert result.converged
        np.testing.assert_allclose(result.solution.values, y, atol=1e-8)


def test_identity_inf_matches_soft_threshold():
    y = np.array([3.0, -1.0, 0.2])
    result = decode(_identity_problem(y, 1.0, math.inf))
    oracle = decode_identity_closed_form(y, 1.0, math.inf)
    np.testing.assert_allclose(result.solution.values, oracle.values, atol=1e-7)


def test_identity_l1_budget_objective():
    rng = np.random.default_rng(10)
    for _ in range(10):
        y = rng.standard_normal(6) * 2
        eps = float(rng.uniform(0.0, np.abs(y).sum()))
        result = decode(_identity_problem(y, eps, 1.0))
        assert result.converged
        assert result.objective == pytest.approx(np.abs(y).sum() - eps, abs=1e-6)


def test_closed_form_examples():
    oracle = decode_identity_closed_form([3.0, -1.0], 1.0, math.inf)
    np.testing.assert_allclose(oracle.values, [2.0, 0.0])
    oracle = decode_identity_closed_form([3.0, -1.0], 1.0, 1.0)
    np.testing.assert_allclose(oracle.values, [2.0, -1.0])
    oracle = decode_identity_closed_form([3.0, -1.0], 0.0, 1.0)
    np.testing.assert_allclose(oracle.values, [3.0, -1.0])
    with pytest.raises(ValueError):
        decode_identity_closed_form([1.0], 0.5, 2.0)
    with pytest.raises(ValueError):
        decode_identity_closed_form([1.0], -0.5, 1.0)


def test_closed_form_is_feasible_and_attains_value():
    rng = np.random.default_rng(1)
    for _ in range(20):
        y = rng.standard_normal(5) * 3
        eps = float(rng.uniform(0.0, 1.5 * np.abs(y).sum()))
        x1 = decode_identity_closed_form(y, eps, 1.0).values
        assert np.abs(x1 - y).sum() <= eps + 1e-12
        assert np.abs(x1).sum() == pytest.approx(
            np.abs(y).sum() - min(eps, np.abs(y).sum()), abs=1e-12
        )
        xi = decode_identity_closed_form(y, eps, math.inf).values
        assert np.abs(xi - y).max() <= eps + 1e-12


def test_p2_large_budget_returns_zero():
    y = np.array([1.0, -0.5, 0.25])
    eps = float(np.linalg.norm(y)) * 1.5
    result = decode(_identity_problem(y, eps, 2.0))
    assert result.converged
    assert np.abs(result.solution.values).max() <= 1e-8


def test_exact_recovery_at_desk_scale():
    successes = 0
    for seed in range(30):
        matrix = gen_gaussian_matrix(12, 20, RngStream(seed))
        signal = gen_sparse_signal(20, 2, RngStream(seed).stream(1))
        y = matrix.values @ signal.values
        problem = RecoveryProblem(matrix=matrix, observations=y, noise_level=0.0, p=2.0)
        result = decode(problem)
        rel = np.linalg.norm(result.solution.values - signal.values)
        rel /= np.linalg.norm(signal.values)
        if result.converged and rel <= 1e-4:
            successes += 1
    assert successes >= 27


def test_objective_monotone_in_eps():
    rng = np.random.default_rng(6)
    matrix = SenseMatrix(rng.standard_normal((8, 12)))
    y = rng.standard_normal(8)
    for p in (1.0, 2.0, math.inf):
        objectives = []
        for eps in (0.0, 0.2, 0.5, 1.0):
            problem = RecoveryProblem(
                matrix=matrix, observations=y, noise_level=eps, p=p
            )
            objectives.append(decode(problem).objective)
        for small, large in zip(objectives, objectives[1:]):
            assert large <= small + 2e-5


def test_scaling_equivariance():
    rng = np.random.default_rng(12)
    matrix = SenseMatrix(rng.standard_normal((6, 10)))
    y = rng.standard_normal(6)
    base = decode(
        RecoveryProblem(matrix=matrix, observations=y, noise_level=0.3, p=2.0)
    )
    c = 3.5
    scaled = decode(
        RecoveryProblem(matrix=matrix, observations=c * y, noise_level=c * 0.3, p=2.0)
    )
    assert scaled.objective == pytest.approx(c * base.objective, rel=1e-5)


def test_feasibility_on_convergence():
    rng = np.random.default_rng(3)
    for p in (1.0, 1.5, 2.0, 3.0, math.inf):
        matrix = SenseMatrix(rng.standard_normal((5, 9)))
        y = rng.standard_normal(5)
        eps = 0.25
        problem = RecoveryProblem(matrix=matrix, observations=y, noise_level=eps, p=p)
        result = decode(problem)
        if result.converged:
            assert result.feasibility_gap <= 1e-8
            assert result.residual_lp <= eps + 1e-8
        recomputed = residual_lp(problem, result.solution)
        assert recomputed == pytest.approx(result.residual_lp, abs=1e-12)


def test_infeasible_overdetermined_instance():
    rng = np.random.default_rng(5)
    matrix = SenseMatrix(rng.standard_normal((10, 2)))
    y = rng.standard_normal(10) * 5
    for p in (1.0, 2.0, 3.0, math.inf):
        problem = RecoveryProblem(
            matrix=matrix, observations=y, noise_level=1e-6, p=p
        )
        with pytest.raises(InfeasibleProblemError):
            decode(problem)


def test_zero_matrix_honest_outcomes():
    matrix = SenseMatrix(np.zeros((3, 4)))
    y = np.array([0.1, -0.1, 0.2])
    feasible = RecoveryProblem(
        matrix=matrix, observations=y, noise_level=1.0, p=2.0
    )
    result = decode(feasible)
    assert result.converged
    assert result.objective == 0.0
    with pytest.raises(InfeasibleProblemError):
        decode(
            RecoveryProblem(matrix=matrix, observations=y, noise_level=0.01, p=2.0)
        )


def test_residual_lp_examples():
    matrix = SenseMatrix(np.eye(2))
    problem = RecoveryProblem(
        matrix=matrix, observations=[1.0, -1.0], noise_level=0.0, p=1.0
    )
    assert residual_lp(problem, [0.0, 0.0]) == pytest.approx(2.0)
    problem_inf = RecoveryProblem(
        matrix=matrix, observations=[1.0, -1.0], noise_level=0.0, p=math.inf
    )
    assert residual_lp(problem_inf, [0.0, 0.0]) == pytest.approx(1.0)


def test_general_p_solve_small():
    rng = np.random.default_rng(77)
    matrix = SenseMatrix(rng.standard_normal((4, 6)))
    x0 = np.zeros(6)
    x0[[1, 4]] = [1.0, -2.0]
    y = matrix.values @ x0
    problem = RecoveryProblem(matrix=matrix, observations=y, noise_level=0.1, p=1.5)
    result = decode(problem)
    assert result.converged
    assert lp_norm(matrix.values @ result.solution.values - y, 1.5) <= 0.1 + 1e-8
    assert result.objective <= np.abs(x0).sum() + 1e-6


def test_operator_norm_override():
    y = np.array([1.0, -2.0, 0.5])
    problem = _identity_problem(y, 0.0, 2.0)
    result = decode(problem, SolverConfig(operator_norm_estimate=1.0))
    assert result.converged
    np.testing.assert_allclose(result.solution.values, y, atol=1e-8)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(feasibility_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(step_scale=1.5)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, math.inf])
def test_objective_matches_convex_reference(p):
    from oracles import convex_reference_decode

    rng = np.random.default_rng(int(p * 7) if p != math.inf else 70)
    for m, n in ((5, 8), (8, 12), (10, 6)):
        values = rng.standard_normal((m, n))
        x0 = np.zeros(n)
        support = rng.choice(n, 2, replace=False)
        x0[support] = rng.standard_normal(2) + np.sign(rng.standard_normal(2))
        noise = rng.standard_normal(m)
        for eps_scale in (0.0, 0.15):
            e = eps_scale * noise
            y = values @ x0 + e
            eps = lp_norm(e, p) if eps_scale > 0 else 0.0
            problem = RecoveryProblem(
                matrix=SenseMatrix(values), observations=y, noise_level=eps, p=p
            )
            result = decode(problem)
            assert result.converged
            _, reference = convex_reference_decode(values, y, eps, p)
            assert result.objective <= reference + 1e-5 * max(1.0, reference)
            assert result.objective >= reference - 1e-5 * max(1.0, reference)
