import numpy as np
import pytest

from pblab.errors import AssumptionViolationError, InvalidInputError
from pblab.model import (
    LqNorm,
    Problem,
    SortedL1Norm,
    link_function,
    make_elastic_net_augmented,
    make_fused,
    make_group_lasso,
    make_lasso,
    make_slope,
    make_sqrt_lasso,
    make_tailored_lasso,
    make_trend_filter,
    objective,
)


def toy_problem(n=4, p=3, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    beta = rng.standard_normal(p)
    eps = rng.standard_normal(n)
    return Problem(x, x @ beta + eps, beta, eps)


class TestLinkFunctions:
    def test_values_at_zero(self):
        assert link_function("identity").value(0.0) == 0.0
        assert link_function("sqrt").value(0.0) == 0.0

    def test_derivative_positive_and_nonincreasing(self):
        grid = np.logspace(-8, 8, 60)
        for kind in ("identity", "sqrt"):
            g = link_function(kind)
            d = np.array([g.derivative(x) for x in grid])
            assert np.all(d > 0)
            assert np.all(np.diff(d) <= 1e-15)

    def test_strictly_increasing(self):
        grid = np.logspace(-8, 8, 60)
        for kind in ("identity", "sqrt"):
            g = link_function(kind)
            vals = np.array([g.value(x) for x in grid])
            assert np.all(np.diff(vals) > 0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(InvalidInputError):
            link_function("log")


class TestSortedL1Norm:
    def test_equal_weights_reduce_to_scaled_l1(self):
        norm = SortedL1Norm(np.full(4, 2.5))
        v = np.array([3.0, -1.0, 0.0, 2.0])
        assert norm.value(v) == pytest.approx(2.5 * 6.0)
        assert norm.dual_value(v) == pytest.approx(3.0 / 2.5)

    def test_weights_must_be_sorted_positive(self):
        with pytest.raises(InvalidInputError):
            SortedL1Norm(np.array([1.0, 2.0]))
        with pytest.raises(InvalidInputError):
            SortedL1Norm(np.array([1.0, 0.0]))

    def test_duality_inequality(self):
        rng = np.random.default_rng(5)
        w = np.sort(rng.random(6) + 0.1)[::-1]
        norm = SortedL1Norm(w)
        for _ in range(50):
            u, v = rng.standard_normal((2, 6))
            assert abs(u @ v) <= norm.dual_value(u) * norm.value(v) * (1 + 1e-12) + 1e-12


class TestProblem:
    def test_rejects_zero_response(self):
        with pytest.raises(AssumptionViolationError):
            Problem(np.eye(2), np.zeros(2))

    def test_rejects_inconsistent_truth(self):
        x = np.eye(2)
        with pytest.raises(InvalidInputError):
            Problem(x, np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.array([0.0, 0.0]))

    def test_truth_roundtrip(self):
        prob = toy_problem()
        assert prob.has_truth
        assert np.allclose(prob.x @ prob.beta_star + prob.eps, prob.y)


class TestObjective:
    def test_zero_beta_identity_is_squared_norm(self):
        prob = toy_problem()
        spec = make_lasso(prob.p, 1.0)
        assert objective(spec, prob, np.zeros(prob.p)) == pytest.approx(float(prob.y @ prob.y))

    def test_zero_beta_sqrt_is_norm(self):
        prob = toy_problem()
        spec = make_sqrt_lasso(prob.p, 1.0)
        assert objective(spec, prob, np.zeros(prob.p)) == pytest.approx(
            float(np.linalg.norm(prob.y))
        )

    def test_hand_evaluated_lasso_point(self):
        prob = Problem(np.eye(2), np.array([1.0, 0.0]))
        spec = make_lasso(2, 2.0)
        assert objective(spec, prob, np.array([1.0, 0.0])) == pytest.approx(2.0)

    def test_nonnegative_and_convex_along_segments(self):
        rng = np.random.default_rng(9)
        prob = toy_problem(6, 4, seed=2)
        specs = [
            make_lasso(4, 0.7),
            make_sqrt_lasso(4, 0.7),
            make_group_lasso([[0, 1], [2, 3]], 1.3),
            make_slope(np.array([2.0, 1.5, 1.0, 0.5]), 1.0),
        ]
        for spec in specs:
            for _ in range(40):
                a, b = rng.standard_normal((2, 4)) * 3
                t = rng.random()
                fa, fb = objective(spec, prob, a), objective(spec, prob, b)
                fm = objective(spec, prob, t * a + (1 - t) * b)
                assert fa >= 0 and fb >= 0
                assert fm <= t * fa + (1 - t) * fb + 1e-9


class TestFactories:
    def test_make_lasso_shape(self):
        spec = make_lasso(3, 1.0)
        assert spec.penalty.k == 1
        term = spec.penalty.terms[0]
        assert np.array_equal(term.matrix, np.eye(3))
        assert np.array_equal(term.projection, np.eye(3))
        assert isinstance(term.norm, LqNorm) and term.norm.q == 1

    def test_make_group_lasso_terms(self):
        spec = make_group_lasso([[0, 1], [2]], 0.9)
        assert spec.penalty.k == 2
        assert np.array_equal(np.diag(spec.penalty.terms[0].matrix), [1.0, 1.0, 0.0])
        assert np.array_equal(np.diag(spec.penalty.terms[1].matrix), [0.0, 0.0, 1.0])
        for term in spec.penalty.terms:
            assert isinstance(term.norm, LqNorm) and term.norm.q == 2
            assert np.array_equal(term.projection, np.eye(3))

    def test_group_lasso_per_group_lambdas(self):
        spec = make_group_lasso([[0], [1, 2]], [0.5, 1.5])
        assert np.allclose(spec.penalty.lambdas, [0.5, 1.5])

    def test_groups_must_cover(self):
        with pytest.raises(AssumptionViolationError):
            make_group_lasso([[0, 1]], 1.0, p=3)

    def test_make_fused_uses_difference_matrix(self):
        spec = make_fused(3, 0.4)
        assert spec.requires_identity_design
        assert spec.penalty.kernel_deficient
        assert np.array_equal(
            spec.penalty.terms[0].matrix,
            np.array([[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [0.0, 0.0, 0.0]]),
        )

    def test_trend_filter_order_restriction(self):
        make_trend_filter(6, 3, 1.0)
        with pytest.raises(InvalidInputError):
            make_trend_filter(6, 4, 1.0)

    def test_tailored_lasso_is_a_partition(self):
        spec = make_tailored_lasso(3, [1.0, 2.0, 3.0])
        assert spec.penalty.k == 3
        assert np.allclose(spec.penalty.lambdas, [1.0, 2.0, 3.0])


class TestElasticNetAugmentation:
    def test_zero_ridge_returns_original_problem(self):
        prob = toy_problem()
        spec, aug = make_elastic_net_augmented(prob, 1.0, 0.0)
        assert aug is prob
        assert spec.name == "elastic-net"

    def test_augmented_rows(self):
        prob = toy_problem(3, 2, seed=4)
        _, aug = make_elastic_net_augmented(prob, 1.0, 4.0)
        assert aug.x.shape == (5, 2)
        assert np.array_equal(aug.x[3:], 2.0 * np.eye(2))
        assert np.array_equal(aug.y[3:], np.zeros(2))

    def test_cross_noise_identity(self):
        prob = toy_problem(5, 3, seed=6)
        lam2 = 2.7
        _, aug = make_elastic_net_augmented(prob, 1.0, lam2)
        lhs = aug.x.T @ aug.eps
        rhs = prob.x.T @ prob.eps - lam2 * prob.beta_star
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_augmented_residual_identity(self):
        rng = np.random.default_rng(8)
        prob = toy_problem(5, 3, seed=7)
        lam2 = 1.9
        _, aug = make_elastic_net_augmented(prob, 1.0, lam2)
        for _ in range(20):
            beta = rng.standard_normal(3)
            raug = aug.y - aug.x @ beta
            r = prob.y - prob.x @ beta
            assert float(raug @ raug) == pytest.approx(
                float(r @ r) + lam2 * float(beta @ beta), rel=1e-12
            )
