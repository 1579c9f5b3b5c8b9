"""Scikit-learn style regressors wrapping the composite-norm solvers.

Each estimator stores its constructor arguments verbatim (so ``get_params``,
``set_params``, and ``clone`` behave), validates inputs with the scikit-learn
helpers, and exposes the fitted coefficient vector as ``coef_`` together with
the solver's convergence certificate.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .catalog import bh_slope_weights
from .model import (
    Problem,
    make_elastic_net_augmented,
    make_fused,
    make_group_lasso,
    make_lasso,
    make_slope,
    make_sqrt_lasso,
    make_trend_filter,
)
from .solvers import SolverConfig, solve


class _PenalizedRegressor(RegressorMixin, BaseEstimator):
    """Shared fit/predict plumbing; subclasses build the estimator spec."""

    def __init__(self, tol=1e-8, max_iter=100_000, restarts=2, seed=0):
        self.tol = tol
        self.max_iter = max_iter
        self.restarts = restarts
        self.seed = seed

    def _build_spec(self, n, p):
        raise NotImplementedError

    def _problem(self, x, y):
        return Problem(x, y)

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        problem = self._problem(X, y)
        spec = self._build_spec(problem.n, problem.p)
        cfg = SolverConfig(
            tol=self.tol, max_iter=self.max_iter, restarts=self.restarts, seed=self.seed
        )
        solution = solve(spec, problem, cfg)
        self.coef_ = solution.beta[: X.shape[1]]
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = solution.iterations
        self.kkt_residual_ = solution.kkt_residual
        self.converged_ = solution.converged
        self.objective_ = solution.objective
        self.spec_ = spec
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class LassoRegressor(_PenalizedRegressor):
    """Squared error plus lam * |coef|_1."""

    def __init__(self, lam=1.0, tol=1e-8, max_iter=100_000, restarts=2, seed=0):
        super().__init__(tol=tol, max_iter=max_iter, restarts=restarts, seed=seed)
        self.lam = lam

    def _build_spec(self, n, p):
        return make_lasso(p, self.lam)


class SqrtLassoRegressor(_PenalizedRegressor):
    """Residual norm (not squared) plus lam * |coef|_1; tuning is scale-free."""

    def __init__(self, lam=1.0, tol=1e-8, max_iter=100_000, restarts=2, seed=0):
        super().__init__(tol=tol, max_iter=max_iter, restarts=restarts, seed=seed)
        self.lam = lam

    def _build_spec(self, n, p):
        return make_sqrt_lasso(p, self.lam)


class GroupLassoRegressor(_PenalizedRegressor):
    """Per-group l2 penalties; ``lam`` is shared or one value per group."""

    def __init__(self, groups, lam=1.0, link="identity", tol=1e-8, max_iter=100_000, restarts=2, seed=0):
        super().__init__(tol=tol, max_iter=max_iter, restarts=restarts, seed=seed)
        self.groups = groups
        self.lam = lam
        self.link = link

    def _build_spec(self, n, p):
        return make_group_lasso(self.groups, self.lam, link=self.link, p=p)


class SlopeRegressor(_PenalizedRegressor):
    """Sorted-l1 penalty; default weights follow the 2 sigma sqrt(n log(2p/j)) schedule."""

    def __init__(self, lam=1.0, weights=None, sigma=1.0, tol=1e-8, max_iter=100_000, restarts=2, seed=0):
        super().__init__(tol=tol, max_iter=max_iter, restarts=restarts, seed=seed)
        self.lam = lam
        self.weights = weights
        self.sigma = sigma

    def _build_spec(self, n, p):
        w = self.weights
        if w is None:
            w = bh_slope_weights(n, p, self.sigma)
        return make_slope(np.asarray(w, dtype=float), self.lam)


class ElasticNetRegressor(_PenalizedRegressor):
    """l1 plus squared-l2 penalty, solved through the augmented-rows rewrite."""

    def __init__(self, lam1=1.0, lam2=1.0, tol=1e-8, max_iter=100_000, restarts=2, seed=0):
        super().__init__(tol=tol, max_iter=max_iter, restarts=restarts, seed=seed)
        self.lam1 = lam1
        self.lam2 = lam2

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        spec, augmented = make_elastic_net_augmented(Problem(X, y), self.lam1, self.lam2)
        cfg = SolverConfig(
            tol=self.tol, max_iter=self.max_iter, restarts=self.restarts, seed=self.seed
        )
        solution = solve(spec, augmented, cfg)
        self.coef_ = solution.beta
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = solution.iterations
        self.kkt_residual_ = solution.kkt_residual
        self.converged_ = solution.converged
        self.objective_ = solution.objective
        self.spec_ = spec
        return self


class FusedLassoRegressor(_PenalizedRegressor):
    """Total-variation denoising: fit takes the observed sequence only."""

    def __init__(self, lam=1.0, tol=1e-8, max_iter=100_000, restarts=2, seed=0):
        super().__init__(tol=tol, max_iter=max_iter, restarts=restarts, seed=seed)
        self.lam = lam

    def _build_spec(self, n, p):
        return make_fused(p, self.lam)

    def fit(self, X, y=None):
        if y is None:
            y = np.asarray(X, dtype=float).ravel()
            X = np.eye(y.size)
        return super().fit(X, y)


class TrendFilterRegressor(FusedLassoRegressor):
    """Higher-order differencing penalty against an identity design."""

    def __init__(self, order=2, lam=1.0, tol=1e-8, max_iter=100_000, restarts=2, seed=0):
        super().__init__(lam=lam, tol=tol, max_iter=max_iter, restarts=restarts, seed=seed)
        self.order = order

    def _build_spec(self, n, p):
        return make_trend_filter(p, self.order, self.lam)
