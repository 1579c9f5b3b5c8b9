"""Noise-oracle tuning parameters.

The tuning characterization is lam_j / (2 g'(|Y - X b^lam|^2)) =
c_j * dual_j((X P_j M_j^+)^T eps). For the identity link this is an explicit
formula. For the square-root link the right-hand side depends on lam through
the solution, so a damped fixed-point iteration on lam is run, with a scalar
bisection fallback for single-term penalties if the iteration oscillates.
Also provides the threshold above which every tuning value forces the
all-zero solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (
    AssumptionViolationError,
    DegenerateInputError,
    InvalidInputError,
    NonConvergenceError,
)
from .model import IDENTITY, EstimatorSpec, Problem
from .solvers import RESIDUAL_FLOOR, SolverConfig, solve


@dataclass
class OracleTuning:
    c: np.ndarray
    lam: np.ndarray
    fixed_point_residual: float
    iterations: int
    dual_terms: np.ndarray
    # (lam, residual) per fixed-point step, for audit
    trace: list = field(default_factory=list)


def dual_noise_terms(spec: EstimatorSpec, x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """The k values dual_j((X P_j M_j^+)^T eps), one per penalty term."""
    x = np.asarray(x, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (x.shape[0],):
        raise InvalidInputError("noise length does not match the design")
    out = []
    for term, pinv in zip(spec.penalty.terms, spec.penalty.pinvs):
        carrier = x @ (term.projection @ pinv)
        out.append(term.norm.dual_value(carrier.T @ eps))
    out = np.array(out)
    if np.any(out <= 0):
        raise AssumptionViolationError(
            "a dual noise term vanished; the oracle tuning is undefined on this draw"
        )
    return out


def _masked_duals(spec: EstimatorSpec, v: np.ndarray) -> np.ndarray:
    """dual_j of v restricted to the nonzero rows of each M_j."""
    out = []
    for term in spec.penalty.terms:
        mask = linalg.nonzero_rows(term.matrix)
        out.append(term.norm.dual_value(np.where(mask, v, 0.0)))
    return np.array(out)


def lambda_max(spec: EstimatorSpec, problem: Problem) -> np.ndarray:
    """Tuning vector (all entries equal) beyond which the solution is zero.

    The threshold is max_j 2 g'(|Y|^2) dual_j((X^T Y)^j), floored at one,
    where (X^T Y)^j zeroes coordinates outside the nonzero rows of M_j. It
    guarantees zeroing only when the penalty matrices jointly cover every
    coordinate, so rank-deficient (differencing) penalties are refused.
    """
    if spec.penalty.kernel_deficient:
        raise AssumptionViolationError(
            "the zeroing threshold requires penalty matrices with trivial common kernel"
        )
    xty = problem.x.T @ problem.y
    ysq = float(problem.y @ problem.y)
    gp = 1.0 if spec.link.kind == IDENTITY else spec.link.derivative(ysq)
    m = max(float(np.max(2.0 * gp * _masked_duals(spec, xty))), 1.0)
    return np.full(spec.penalty.k, m)


def _fixed_point_map(target: np.ndarray, resid_norm: float) -> np.ndarray:
    # for the square-root link, 2 g'(r^2) = 1 / r
    return target / resid_norm


def _residual_norm(spec, problem, lam, cfg, warm):
    sol = solve(spec.with_lambdas(lam), problem, cfg, warm_start=warm)
    r = problem.y - problem.x @ sol.beta
    rn = float(np.linalg.norm(r))
    if rn < RESIDUAL_FLOOR * np.linalg.norm(problem.y):
        raise DegenerateInputError("residual vanished while tuning the square-root link")
    return rn, sol


def _bisection_scalar(spec, problem, target, lam0, cfg, fp_tol, trace):
    """Root of lam * r(lam) - target for single-term square-root penalties."""
    t = float(target[0])

    def phi(lam):
        rn, sol = _residual_norm(spec, problem, np.array([lam]), cfg, None)
        return lam * rn - t, rn, sol

    lo = float(lam0[0])
    val, rn, _ = phi(lo)
    grow = 0
    while val > 0 and grow < 60:
        lo /= 2.0
        val, rn, _ = phi(lo)
        grow += 1
    if val > 0:
        raise NonConvergenceError("bisection could not bracket the tuning equation", trace)
    hi = max(2.0 * lo, t / rn)
    val_hi, _, _ = phi(hi)
    grow = 0
    while val_hi < 0 and grow < 60:
        hi *= 2.0
        val_hi, _, _ = phi(hi)
        grow += 1
    if val_hi < 0:
        raise NonConvergenceError("bisection could not bracket the tuning equation", trace)
    for it in range(200):
        mid = 0.5 * (lo + hi)
        rn, sol = _residual_norm(spec, problem, np.array([mid]), cfg, None)
        res = abs(mid - t / rn) / mid
        trace.append((np.array([mid]), res))
        if res <= 10 * fp_tol:
            return np.array([mid]), res, it + 1
        if mid * rn - t < 0:
            lo = mid
        else:
            hi = mid
    raise NonConvergenceError("bisection did not certify the tuning equation", trace)


def oracle_lambda(
    spec: EstimatorSpec,
    problem: Problem,
    c,
    cfg: SolverConfig | None = None,
    fp_tol: float = 1e-8,
    max_fp_iter: int = 200,
    damping: float = 0.5,
) -> OracleTuning:
    """Tuning vector solving lam = 2 g'(|Y - X b^lam|^2) * (c * dual terms).

    Identity link: the closed form 2 c dual, exactly, with zero iterations.
    Square-root link: damped fixed-point iteration started at the zeroing
    threshold when available; certification requires the relative fixed-point
    residual to reach ten times ``fp_tol``.
    """
    if not problem.has_truth:
        raise InvalidInputError("oracle tuning needs the ground-truth noise vector")
    if not 0 < damping <= 1:
        raise InvalidInputError("damping must be in (0, 1]")
    k = spec.penalty.k
    c = np.broadcast_to(np.asarray(c, dtype=float), (k,)).copy()
    if np.any(c <= 0):
        raise InvalidInputError("the constants c must be positive")
    cfg = cfg or SolverConfig()
    duals = dual_noise_terms(spec, problem.x, problem.eps)
    if spec.link.kind == IDENTITY:
        lam = 2.0 * c * duals
        return OracleTuning(c, lam, 0.0, 0, duals, trace=[(lam.copy(), 0.0)])

    target = c * duals
    # start from the smallest value the map can produce: residuals never
    # exceed |Y|, so every fixed point lies above target / |Y|
    lam = target / float(np.linalg.norm(problem.y))
    trace: list = []
    best_res = np.inf
    stall = 0
    warm = None
    for it in range(1, max_fp_iter + 1):
        rn, sol = _residual_norm(spec, problem, lam, cfg, warm)
        warm = sol.beta
        mapped = _fixed_point_map(target, rn)
        res = float(np.max(np.abs(lam - mapped)) / np.max(np.abs(lam)))
        trace.append((lam.copy(), res))
        if res <= 10 * fp_tol:
            return OracleTuning(c, lam, res, it, duals, trace)
        if res < best_res - 1e-16:
            best_res = res
            stall = 0
        else:
            stall += 1
        if stall >= 20 and k == 1:
            lam, res, extra = _bisection_scalar(spec, problem, target, lam, cfg, fp_tol, trace)
            return OracleTuning(c, lam, res, it + extra, duals, trace)
        lam = (1.0 - damping) * lam + damping * mapped
    raise NonConvergenceError(
        f"fixed-point iteration missed tolerance {fp_tol} in {max_fp_iter} steps", trace
    )
