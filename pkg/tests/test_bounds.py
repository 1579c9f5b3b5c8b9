import numpy as np
import pytest

from pblab.bounds import (
    BoundReport,
    check_bound,
    la_loss,
    la_sharp_bound,
    prediction_lhs,
    slack_allowance,
    special1_bound,
    special2_bound,
    theorem_rhs,
)
from pblab.errors import CertificationError, InvalidInputError, InvalidPremiseError
from pblab.linalg import fused_pinv
from pblab.model import Problem, make_fused, make_group_lasso, make_lasso
from pblab.solvers import SolverConfig, solve
from pblab.tuning import oracle_lambda

CFG = SolverConfig(tol=1e-10, restarts=1, seed=0)


def lasso_instance(n=20, p=10, seed=0, s=3, amplitude=1.0, c=1.0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    x *= np.sqrt(n) / np.linalg.norm(x, axis=0)
    beta = np.zeros(p)
    beta[:s] = amplitude
    eps = rng.standard_normal(n)
    prob = Problem(x, x @ beta + eps, beta, eps)
    tuning = oracle_lambda(make_lasso(p, 1.0), prob, c)
    spec = make_lasso(p, 1.0).with_lambdas(tuning.lam)
    sol = solve(spec, prob, CFG)
    return spec, prob, tuning, sol


class TestTheoremRhs:
    def test_limit_at_truth_equals_special2(self):
        spec, prob, tuning, sol = lasso_instance()
        limit = theorem_rhs(spec, prob, tuning, sol, prob.beta_star, 0.0)
        rep = special2_bound(spec, prob, tuning, sol)
        assert limit == pytest.approx(rep.rhs, rel=1e-12)

    def test_limit_away_from_truth_is_infinite(self):
        spec, prob, tuning, sol = lasso_instance()
        assert theorem_rhs(spec, prob, tuning, sol, np.ones(prob.p) * 5, 0.0) == np.inf

    def test_u_half_hand_formula(self):
        spec, prob, tuning, sol = lasso_instance(seed=1)
        rng = np.random.default_rng(2)
        beta = rng.standard_normal(prob.p)
        got = theorem_rhs(spec, prob, tuning, sol, beta, 0.5)
        diff = prob.x @ (prob.beta_star - beta)
        expected = float(diff @ diff) / prob.n + 4.0 / prob.n * tuning.dual_terms[0] * float(
            np.sum(np.abs(beta))
        )
        assert got == pytest.approx(expected, rel=1e-12)

    def test_u_out_of_range(self):
        spec, prob, tuning, sol = lasso_instance(seed=3)
        for bad in (-0.1, 1.0, 1.5):
            with pytest.raises(InvalidInputError):
                theorem_rhs(spec, prob, tuning, sol, prob.beta_star, bad)

    def test_credit_term_only_helps_for_c_above_one(self):
        spec, prob, tuning, sol = lasso_instance(seed=4, c=2.0)
        with_credit = theorem_rhs(spec, prob, tuning, sol, prob.beta_star, 0.5)
        duals, c = tuning.dual_terms, tuning.c
        no_credit = 2.0 / prob.n * float(
            np.sum((1 + c) * duals * np.abs(prob.beta_star).sum())
        )
        assert with_credit <= no_credit + 1e-12


class TestSpecial1:
    def test_candidate_beta_star_value(self):
        spec, prob, tuning, sol = lasso_instance(seed=5)
        rep = special1_bound(spec, prob, tuning, sol)
        at_truth = 4.0 / prob.n * tuning.dual_terms[0] * float(np.sum(np.abs(prob.beta_star)))
        assert rep.rhs <= at_truth + 1e-12
        assert rep.holds

    def test_zero_truth_gives_zero_rhs(self):
        spec, prob, tuning, sol = lasso_instance(seed=6, s=0)
        rep = special1_bound(spec, prob, tuning, sol)
        assert rep.rhs == 0.0
        assert rep.candidate in ("beta_star", "zero")
        assert rep.holds

    def test_more_candidates_never_increase_rhs(self):
        spec, prob, tuning, sol = lasso_instance(seed=7)
        base = special1_bound(spec, prob, tuning, sol)
        rng = np.random.default_rng(8)
        extra = [rng.standard_normal(prob.p) for _ in range(5)]
        widened = special1_bound(spec, prob, tuning, sol, candidates=extra)
        assert widened.rhs <= base.rhs + 1e-15

    def test_requires_unit_c(self):
        spec, prob, tuning, sol = lasso_instance(seed=9, c=2.0)
        with pytest.raises(InvalidPremiseError):
            special1_bound(spec, prob, tuning, sol)


class TestSpecial2:
    def test_lasso_closed_form(self):
        spec, prob, tuning, sol = lasso_instance(seed=10)
        rep = special2_bound(spec, prob, tuning, sol)
        expected = (
            2.0
            / prob.n
            * float(np.max(np.abs(prob.x.T @ prob.eps)))
            * float(np.sum(np.abs(prob.beta_star)))
        )
        assert rep.rhs == pytest.approx(expected, rel=1e-12)
        assert rep.holds and rep.certified

    def test_group_closed_form(self):
        rng = np.random.default_rng(11)
        n, p = 30, 8
        x = rng.standard_normal((n, p))
        beta = np.zeros(p)
        beta[:4] = 0.7
        eps = rng.standard_normal(n)
        prob = Problem(x, x @ beta + eps, beta, eps)
        groups = [[0, 1, 2, 3], [4, 5, 6, 7]]
        tuning = oracle_lambda(make_group_lasso(groups, 1.0), prob, 1.0)
        spec = make_group_lasso(groups, 1.0).with_lambdas(tuning.lam)
        sol = solve(spec, prob, CFG)
        rep = special2_bound(spec, prob, tuning, sol)
        xe = prob.x.T @ prob.eps
        expected = 2.0 / n * sum(
            np.linalg.norm(xe[g]) * np.linalg.norm(beta[g]) for g in groups
        )
        assert rep.rhs == pytest.approx(expected, rel=1e-12)
        assert rep.holds

    def test_fused_closed_form(self):
        p = 12
        rng = np.random.default_rng(12)
        beta = np.repeat([1.0, 2.0, 0.5], p // 3)
        eps = rng.standard_normal(p)
        prob = Problem(np.eye(p), beta + eps, beta, eps)
        tuning = oracle_lambda(make_fused(p, 1.0), prob, 1.0)
        spec = make_fused(p, 1.0).with_lambdas(tuning.lam)
        sol = solve(spec, prob, CFG)
        rep = special2_bound(spec, prob, tuning, sol)
        d = spec.penalty.terms[0].matrix
        expected = (
            2.0
            / p
            * float(np.max(np.abs(fused_pinv(p).T @ eps)))
            * float(np.sum(np.abs(d @ beta)))
        )
        assert rep.rhs == pytest.approx(expected, rel=1e-10)
        assert rep.holds

    def test_factor_two_identity(self):
        spec, prob, tuning, sol = lasso_instance(seed=13)
        rep2 = special2_bound(spec, prob, tuning, sol)
        pen_portion = 4.0 / prob.n * float(
            np.sum(tuning.dual_terms * np.array([np.sum(np.abs(prob.beta_star))]))
        )
        assert rep2.rhs == pytest.approx(0.5 * pen_portion, rel=1e-12)


class TestBalancedLoss:
    def test_factor_two_for_c_three(self):
        spec, prob, tuning, sol = lasso_instance(seed=14, c=3.0)
        rep = la_sharp_bound(spec, prob, tuning, sol)
        a = 2.0 * (tuning.c - 1.0) * tuning.dual_terms
        assert rep.per_term[0]["factor"] == pytest.approx(2.0, rel=1e-12)
        assert rep.lhs == pytest.approx(la_loss(spec, prob, a, sol.beta), rel=1e-12)
        assert rep.holds

    def test_premise_enforced(self):
        spec, prob, tuning, sol = lasso_instance(seed=15, c=1.0)
        with pytest.raises(InvalidPremiseError):
            la_sharp_bound(spec, prob, tuning, sol)

    def test_zero_truth_forces_zero_loss(self):
        spec, prob, tuning, sol = lasso_instance(seed=16, s=0, c=3.0)
        rep = la_sharp_bound(spec, prob, tuning, sol)
        assert rep.rhs == 0.0
        assert rep.lhs <= slack_allowance(prob, 1e-10) * 2.0


class TestCheckBound:
    def test_special2_holds_on_gaussian_instance(self):
        spec, prob, tuning, sol = lasso_instance(seed=17)
        rep = check_bound(spec, prob, tuning, sol, "special2")
        assert isinstance(rep, BoundReport)
        assert rep.holds and rep.certified

    def test_theorem_u_half_holds(self):
        spec, prob, tuning, sol = lasso_instance(seed=18)
        rep = check_bound(spec, prob, tuning, sol, "theorem", u=0.5)
        assert rep.holds and rep.certified

    def test_mistuned_solution_not_certified(self):
        spec, prob, tuning, sol = lasso_instance(seed=19)
        mistuned = spec.with_lambdas(0.01 * tuning.lam)
        sol_bad = solve(mistuned, prob, CFG)
        rep = check_bound(mistuned, prob, tuning, sol_bad, "special2")
        assert not rep.certified

    def test_unconverged_refused(self):
        spec, prob, tuning, sol = lasso_instance(seed=20)
        stuck = solve(spec, prob, SolverConfig(tol=1e-16, max_iter=2, restarts=1))
        assert not stuck.converged
        with pytest.raises(CertificationError):
            check_bound(spec, prob, tuning, stuck, "special2")

    def test_zero_truth_collapse(self):
        for seed in range(10):
            spec, prob, tuning, sol = lasso_instance(seed=100 + seed, s=0)
            assert prediction_lhs(spec, prob, sol) <= slack_allowance(prob, 1e-10)
