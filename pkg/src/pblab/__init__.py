"""Composite-norm penalized regression with noise-oracle tuning and
certified prediction bounds."""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    check_bound,
    la_loss,
    la_sharp_bound,
    prediction_lhs,
    special1_bound,
    special2_bound,
    theorem_rhs,
)
from .estimators import (
    ElasticNetRegressor,
    FusedLassoRegressor,
    GroupLassoRegressor,
    LassoRegressor,
    SlopeRegressor,
    SqrtLassoRegressor,
    TrendFilterRegressor,
)
from .model import (
    EstimatorSpec,
    PenaltySpec,
    PenaltyTerm,
    Problem,
    make_elastic_net_augmented,
    make_fused,
    make_group_lasso,
    make_lasso,
    make_slope,
    make_sqrt_lasso,
    make_trend_filter,
    objective,
)
from .solvers import SolverConfig, Solution, kkt_residual, solve
from .tuning import OracleTuning, dual_noise_terms, lambda_max, oracle_lambda

__all__ = [
    "BoundReport",
    "ElasticNetRegressor",
    "EstimatorSpec",
    "FusedLassoRegressor",
    "GroupLassoRegressor",
    "LassoRegressor",
    "OracleTuning",
    "PenaltySpec",
    "PenaltyTerm",
    "Problem",
    "SlopeRegressor",
    "Solution",
    "SolverConfig",
    "SqrtLassoRegressor",
    "TrendFilterRegressor",
    "check_bound",
    "dual_noise_terms",
    "kkt_residual",
    "la_loss",
    "la_sharp_bound",
    "lambda_max",
    "make_elastic_net_augmented",
    "make_fused",
    "make_group_lasso",
    "make_lasso",
    "make_slope",
    "make_sqrt_lasso",
    "make_trend_filter",
    "objective",
    "oracle_lambda",
    "prediction_lhs",
    "special1_bound",
    "special2_bound",
    "solve",
    "theorem_rhs",
]
