import numpy as np
import pytest

from pblab.errors import AssumptionViolationError, InvalidInputError
from pblab.linalg import fused_pinv
from pblab.model import (
    Problem,
    make_fused,
    make_group_lasso,
    make_lasso,
    make_slope,
    make_sqrt_lasso,
)
from pblab.solvers import SolverConfig, solve
from pblab.tuning import dual_noise_terms, lambda_max, oracle_lambda

CFG = SolverConfig(tol=1e-8, restarts=1, seed=0)


def gaussian_problem(n, p, seed, sigma=1.0, s=3, amplitude=1.0, normalize=True):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    if normalize:
        x *= np.sqrt(n) / np.linalg.norm(x, axis=0)
    beta = np.zeros(p)
    beta[:s] = amplitude
    eps = sigma * rng.standard_normal(n)
    return Problem(x, x @ beta + eps, beta, eps)


class TestDualNoiseTerms:
    def test_lasso_is_sup_norm_of_gram_noise(self):
        prob = gaussian_problem(12, 6, seed=0)
        spec = make_lasso(6, 1.0)
        terms = dual_noise_terms(spec, prob.x, prob.eps)
        assert terms.shape == (1,)
        assert terms[0] == pytest.approx(float(np.max(np.abs(prob.x.T @ prob.eps))), rel=1e-12)

    def test_group_terms_and_dominating_collapse(self):
        prob = gaussian_problem(12, 6, seed=1)
        groups = [[0, 1, 2], [3, 4, 5]]
        spec = make_group_lasso(groups, 1.0)
        terms = dual_noise_terms(spec, prob.x, prob.eps)
        xe = prob.x.T @ prob.eps
        for j, g in enumerate(groups):
            assert terms[j] == pytest.approx(float(np.linalg.norm(xe[g])), rel=1e-12)
        assert float(np.max(terms)) == pytest.approx(
            max(np.linalg.norm(xe[g]) for g in groups), rel=1e-12
        )

    def test_fused_term_uses_pinv_transpose(self):
        p = 8
        rng = np.random.default_rng(2)
        beta = np.repeat([1.0, -0.5], p // 2)
        eps = rng.standard_normal(p)
        prob = Problem(np.eye(p), beta + eps, beta, eps)
        spec = make_fused(p, 1.0)
        terms = dual_noise_terms(spec, prob.x, prob.eps)
        expected = float(np.max(np.abs(fused_pinv(p).T @ eps)))
        assert terms[0] == pytest.approx(expected, rel=1e-10)

    def test_zero_noise_rejected(self):
        x = np.eye(3)
        beta = np.array([1.0, 2.0, 3.0])
        prob = Problem(x, beta, beta, np.zeros(3))
        with pytest.raises(AssumptionViolationError):
            dual_noise_terms(make_lasso(3, 1.0), prob.x, prob.eps)


class TestOracleLambdaIdentity:
    def test_lasso_closed_form(self):
        prob = gaussian_problem(15, 8, seed=3)
        tuning = oracle_lambda(make_lasso(8, 1.0), prob, 1.0)
        assert tuning.iterations == 0
        assert tuning.fixed_point_residual == 0.0
        assert tuning.lam[0] == pytest.approx(
            2.0 * float(np.max(np.abs(prob.x.T @ prob.eps))), rel=1e-12
        )

    def test_scaling_in_noise_is_exact(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((20, 7))
        beta = np.zeros(7)
        beta[0] = 1.0
        eps = rng.standard_normal(20)
        for s in (0.5, 2.0, 10.0):
            p1 = Problem(x, x @ beta + eps, beta, eps)
            p2 = Problem(x, x @ beta + s * eps, beta, s * eps)
            lam1 = oracle_lambda(make_lasso(7, 1.0), p1, 1.0).lam
            lam2 = oracle_lambda(make_lasso(7, 1.0), p2, 1.0).lam
            assert lam2[0] == pytest.approx(s * lam1[0], rel=1e-12)

    def test_c_vector_scales_componentwise(self):
        prob = gaussian_problem(10, 4, seed=5)
        spec = make_group_lasso([[0, 1], [2, 3]], 1.0)
        base = oracle_lambda(spec, prob, 1.0)
        doubled = oracle_lambda(spec, prob, np.array([2.0, 1.0]))
        assert doubled.lam[0] == pytest.approx(2 * base.lam[0], rel=1e-12)
        assert doubled.lam[1] == pytest.approx(base.lam[1], rel=1e-12)

    def test_truth_required(self):
        prob = Problem(np.eye(2), np.array([1.0, 2.0]))
        with pytest.raises(InvalidInputError):
            oracle_lambda(make_lasso(2, 1.0), prob, 1.0)


class TestOracleLambdaSqrt:
    def test_sqrt_lasso_fixed_point_certificate(self):
        prob = gaussian_problem(30, 15, seed=6, s=2, amplitude=0.5)
        tuning = oracle_lambda(make_sqrt_lasso(15, 1.0), prob, 1.0, CFG)
        assert tuning.iterations <= 200
        assert tuning.fixed_point_residual <= 1e-7
        # verify the equation independently: lam = |X' eps|_inf / |Y - X bhat|
        sol = solve(make_sqrt_lasso(15, float(tuning.lam[0])), prob, CFG)
        rn = float(np.linalg.norm(prob.y - prob.x @ sol.beta))
        expected = float(np.max(np.abs(prob.x.T @ prob.eps))) / rn
        assert tuning.lam[0] == pytest.approx(expected, rel=1e-6)

    def test_group_sqrt_fixed_point_certificate(self):
        prob = gaussian_problem(30, 12, seed=7, s=2, amplitude=0.5)
        spec = make_group_lasso([[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11]], 1.0, link="sqrt")
        tuning = oracle_lambda(spec, prob, 1.0, CFG)
        assert tuning.fixed_point_residual <= 1e-7
        assert np.all(tuning.lam > 0)

    def test_sqrt_lambda_near_sqrt_log_p(self):
        lams = []
        for seed in range(5):
            prob = gaussian_problem(100, 50, seed=10 + seed, s=2, amplitude=0.25)
            tuning = oracle_lambda(make_sqrt_lasso(50, 1.0), prob, 1.0, CFG)
            lams.append(float(tuning.lam[0]))
        ratio = np.median(lams) / np.sqrt(np.log(50))
        assert 0.5 <= ratio <= 2.0

    def test_zero_truth_converges_immediately(self):
        prob = gaussian_problem(20, 10, seed=8, s=0)
        tuning = oracle_lambda(make_sqrt_lasso(10, 1.0), prob, 1.0, CFG)
        assert tuning.iterations == 1
        expected = float(np.max(np.abs(prob.x.T @ prob.eps))) / float(np.linalg.norm(prob.eps))
        assert tuning.lam[0] == pytest.approx(expected, rel=1e-8)


class TestLambdaMax:
    def test_lasso_threshold_value(self):
        prob = gaussian_problem(10, 5, seed=9)
        m = lambda_max(make_lasso(5, 1.0), prob)
        expected = max(2.0 * float(np.max(np.abs(prob.x.T @ prob.y))), 1.0)
        assert np.allclose(m, expected)

    def test_scales_linearly_with_response(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((10, 5))
        y = rng.standard_normal(10)
        m1 = lambda_max(make_lasso(5, 1.0), Problem(x, y))
        m10 = lambda_max(make_lasso(5, 1.0), Problem(x, 10 * y))
        assert m10[0] == pytest.approx(10 * m1[0], rel=1e-12)

    def test_floor_of_one(self):
        x = np.eye(2)
        y = np.array([1e-4, 0.0])
        assert lambda_max(make_lasso(2, 1.0), Problem(x, y))[0] == 1.0

    @pytest.mark.parametrize("builder", [
        lambda p: make_lasso(p, 1.0),
        lambda p: make_sqrt_lasso(p, 1.0),
        lambda p: make_group_lasso([[0, 1, 2], [3, 4, 5], [6, 7]], 1.0, p=8),
        lambda p: make_group_lasso([[0, 1], [2, 3], [4, 5], [6, 7]], 1.0, link="sqrt", p=8),
        lambda p: make_slope(np.linspace(3, 1, 8), 1.0),
    ])
    def test_zeroing_and_half_threshold(self, builder):
        p = 8
        zero_count = 0
        nonzero_count = 0
        for seed in range(12):
            prob = gaussian_problem(12, p, seed=40 + seed)
            spec = builder(p)
            m = lambda_max(spec, prob)
            sol = solve(spec.with_lambdas(m), prob, CFG)
            assert np.max(np.abs(sol.beta)) <= 1e-8
            zero_count += 1
            sol_half = solve(spec.with_lambdas(0.5 * m), prob, CFG)
            if np.max(np.abs(sol_half.beta)) > 0:
                nonzero_count += 1
        assert zero_count == 12
        assert nonzero_count >= 0.9 * 12

    def test_kernel_deficient_penalty_refused(self):
        rng = np.random.default_rng(11)
        y = rng.standard_normal(6) + 2.0
        prob = Problem(np.eye(6), y)
        with pytest.raises(AssumptionViolationError):
            lambda_max(make_fused(6, 1.0), prob)
