"""Estimator catalog: builders behind the labels the CLI and harness accept.

Each entry turns a problem plus a parameter dict into an estimator template
(all tuning values set to one; the oracle tuner fills them in). The
elastic-net entry also rewrites the problem itself (augmented rows).
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidInputError
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


def default_groups(p: int, group_size: int):
    if group_size < 1:
        raise InvalidInputError("group size must be at least 1")
    return [list(range(i, min(i + group_size, p))) for i in range(0, p, group_size)]


def bh_slope_weights(n: int, p: int, sigma: float) -> np.ndarray:
    """Benjamini-Hochberg-style weights 2 sigma sqrt(n log(2p/j))."""
    j = np.arange(1, p + 1)
    return 2.0 * sigma * np.sqrt(n * np.log(2.0 * p / j))


def elastic_net_lambda2(cross_noise: np.ndarray, beta_star: np.ndarray) -> float:
    """Ridge weight minimizing the sup norm of (X^T eps - t beta*)."""
    scale = float(np.max(np.abs(beta_star)))
    if scale == 0.0:
        return 0.0
    hi = 2.0 * float(np.max(np.abs(cross_noise))) / scale + 1e-12

    def h(t):
        return float(np.max(np.abs(cross_noise - t * beta_star)))

    res = minimize_scalar(h, bounds=(0.0, hi), method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def _build_lasso(problem, params):
    return make_lasso(problem.p, 1.0), problem


def _build_sqrt_lasso(problem, params):
    return make_sqrt_lasso(problem.p, 1.0), problem


def _build_group(problem, params, link):
    groups = params.get("groups")
    if groups is None:
        groups = default_groups(problem.p, int(params.get("group_size", 5)))
    return make_group_lasso(groups, 1.0, link=link, p=problem.p), problem


def _build_elastic_net(problem, params):
    lam2 = params.get("lambda2", "argmin")
    if lam2 == "argmin":
        if not problem.has_truth:
            raise InvalidInputError("elastic-net lambda2='argmin' needs the ground truth")
        lam2 = elastic_net_lambda2(problem.x.T @ problem.eps, problem.beta_star)
    return make_elastic_net_augmented(problem, 1.0, float(lam2))


def _build_slope(problem, params):
    weights = params.get("weights")
    if weights is None:
        sigma = float(params.get("sigma", 1.0))
        weights = bh_slope_weights(problem.n, problem.p, sigma)
    return make_slope(np.asarray(weights, dtype=float), 1.0), problem


def _build_fused(problem, params):
    return make_fused(problem.p, 1.0), problem


def _build_trend(problem, params):
    return make_trend_filter(problem.p, int(params.get("order", 2)), 1.0), problem


CATALOG = {
    "lasso": {
        "build": _build_lasso,
        "identity_design": False,
        "schema": {},
    },
    "sqrt-lasso": {
        "build": _build_sqrt_lasso,
        "identity_design": False,
        "schema": {},
    },
    "group-lasso": {
        "build": lambda prob, params: _build_group(prob, params, "identity"),
        "identity_design": False,
        "schema": {"groups": "explicit 0-based index groups", "group_size": "consecutive block size (default 5)"},
    },
    "group-sqrt-lasso": {
        "build": lambda prob, params: _build_group(prob, params, "sqrt"),
        "identity_design": False,
        "schema": {"groups": "explicit 0-based index groups", "group_size": "consecutive block size (default 5)"},
    },
    "elastic-net": {
        "build": _build_elastic_net,
        "identity_design": False,
        "schema": {"lambda2": "ridge weight, or 'argmin' for the sup-norm-minimizing choice"},
    },
    "slope": {
        "build": _build_slope,
        "identity_design": False,
        "schema": {"weights": "explicit non-increasing weights", "sigma": "noise scale for the default weights"},
    },
    "fused": {
        "build": _build_fused,
        "identity_design": True,
        "schema": {},
    },
    "trend-filter": {
        "build": _build_trend,
        "identity_design": True,
        "schema": {"order": "difference order, 1..3 (default 2)"},
    },
}

# estimators exercised by the default certification campaign
DEFAULT_CAMPAIGN = [
    "lasso",
    "sqrt-lasso",
    "group-lasso",
    "group-sqrt-lasso",
    "elastic-net",
    "slope",
    "fused",
]


def catalog_labels():
    return list(CATALOG)


def build_estimator(label: str, problem: Problem, params: dict | None = None):
    """Instantiate a catalog estimator template on a problem.

    Returns (spec, problem); the problem comes back augmented for the
    elastic net and unchanged otherwise.
    """
    if label not in CATALOG:
        raise InvalidInputError(f"unknown estimator {label!r}; see the catalog")
    return CATALOG[label]["build"](problem, dict(params or {}))


def needs_identity_design(label: str) -> bool:
    if label not in CATALOG:
        raise InvalidInputError(f"unknown estimator {label!r}; see the catalog")
    return CATALOG[label]["identity_design"]
