"""Prediction-bound functionals and certification.

The main inequality bounds |X(beta* - bhat)|^2 / n by an infimum over a free
point beta and a free u in (0, 1) of: an approximation term, plus penalty
terms weighted by the dual noise values, minus an estimator-dependent credit
that is nonnegative whenever every c_j >= 1. Two named specializations are
evaluated in closed form: u = 0.5 with c = 1 (minimized over a candidate
set), and the u -> 0 limit at beta = beta* with c = 1. Every evaluation of
the functional is itself a valid upper bound, which is all certification
needs; the infimum is never chased globally.

Rank-deficient penalties (total-variation differencing) leave their common
kernel unpenalized: the error component along that kernel is raw noise that
no tuning can shrink, so no finite bound on it exists. For those penalties
every error vector here is projected onto the joint row space of the penalty
matrices first; inside that quotient the partition identity holds and the
inequality is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationError, InvalidInputError, InvalidPremiseError
from .model import EstimatorSpec, Problem
from .solvers import Solution
from .tuning import OracleTuning

# mirrors the default solver tolerance; certification adds this much slack
# to absorb inexact minimization
def slack_allowance(problem: Problem, tol: float = 1e-8) -> float:
    return 10.0 * tol * (1.0 + float(problem.y @ problem.y) / problem.n)


@dataclass
class BoundReport:
    mode: str
    lhs: float
    rhs: float
    u: float | None              # None encodes the u -> 0 limit
    candidate: str
    per_term: list = field(default_factory=list)
    slack: float = 0.0
    holds: bool = False
    certified: bool = False


def _error_image(spec: EstimatorSpec, problem: Problem, delta: np.ndarray) -> np.ndarray:
    """X delta, with delta projected into the penalized quotient first when
    the penalty matrices share a kernel."""
    projector = spec.penalty.error_projector()
    if projector is not None:
        delta = projector @ delta
    return problem.x @ delta


def prediction_lhs(spec: EstimatorSpec, problem: Problem, solution: Solution) -> float:
    """|X(beta* - bhat)|^2 / n, in the penalized quotient if applicable."""
    if not problem.has_truth:
        raise InvalidInputError("prediction error needs the ground truth")
    d = _error_image(spec, problem, problem.beta_star - solution.beta)
    return float(d @ d) / problem.n


def _penalty_values(spec: EstimatorSpec, beta: np.ndarray) -> np.ndarray:
    return np.array([t.norm.value(t.matrix @ beta) for t in spec.penalty.terms])


def theorem_rhs(
    spec: EstimatorSpec,
    problem: Problem,
    tuning: OracleTuning,
    solution: Solution,
    beta: np.ndarray,
    u: float,
) -> float:
    """The bound functional at one (u, beta) pair, credit term included.

    ``u = 0`` evaluates the limit u -> 0, which is finite only when
    X beta = X beta*; otherwise the exact limit +inf is returned.
    """
    if not 0 <= u < 1:
        raise InvalidInputError("u must lie in (0, 1), or be 0 for the limit")
    if not problem.has_truth:
        raise InvalidInputError("the bound functional needs the ground truth")
    beta = np.asarray(beta, dtype=float)
    n = problem.n
    diff = _error_image(spec, problem, problem.beta_star - beta)
    approx = float(diff @ diff)
    duals = tuning.dual_terms
    c = tuning.c
    pen_beta = _penalty_values(spec, beta)
    pen_hat = _penalty_values(spec, solution.beta)
    penalty = float(np.sum((1.0 + c) * duals * pen_beta)) / ((1.0 - u) * n)
    credit = float(np.sum((c - 1.0) * duals * pen_hat)) / ((1.0 - u) * n)
    if u == 0:
        if approx > 0:
            return math.inf
        return penalty - credit
    return approx / (4.0 * u * (1.0 - u) * n) + penalty - credit


def _require_unit_c(tuning: OracleTuning):
    if not np.allclose(tuning.c, 1.0, rtol=0, atol=1e-12):
        raise InvalidPremiseError("this specialization is stated for c = 1")


def _certify(spec: EstimatorSpec, tuning: OracleTuning) -> bool:
    lams = spec.penalty.lambdas
    return bool(
        np.max(np.abs(lams - tuning.lam)) <= 1e-9 * max(float(np.max(np.abs(tuning.lam))), 1e-300)
    )


def _finish(report: BoundReport, allowance: float) -> BoundReport:
    report.slack = report.rhs - report.lhs
    report.holds = report.lhs <= report.rhs + allowance
    return report


def special1_bound(
    spec: EstimatorSpec,
    problem: Problem,
    tuning: OracleTuning,
    solution: Solution,
    candidates=None,
    tol: float = 1e-8,
) -> BoundReport:
    """u = 0.5, c = 1: approximation error plus four times the weighted
    penalty, minimized over the candidate set (beta* and 0 are always in)."""
    _require_unit_c(tuning)
    named = [("beta_star", problem.beta_star), ("zero", np.zeros(problem.p))]
    for i, cand in enumerate(candidates or []):
        named.append((f"candidate_{i}", np.asarray(cand, dtype=float)))
    duals = tuning.dual_terms
    n = problem.n
    best_label, best_val, best_terms = None, math.inf, None
    for label, cand in named:
        diff = _error_image(spec, problem, problem.beta_star - cand)
        pen = _penalty_values(spec, cand)
        val = float(diff @ diff) / n + 4.0 / n * float(np.sum(duals * pen))
        if val < best_val:
            best_label, best_val = label, val
            best_terms = [
                {"dual": float(d), "penalty": 4.0 / n * float(d * pv), "credit": 0.0}
                for d, pv in zip(duals, pen)
            ]
    report = BoundReport(
        mode="special1",
        lhs=prediction_lhs(spec, problem, solution),
        rhs=best_val,
        u=0.5,
        candidate=best_label,
        per_term=best_terms,
        certified=solution.converged and _certify(spec, tuning),
    )
    return _finish(report, slack_allowance(problem, tol))


def special2_bound(
    spec: EstimatorSpec,
    problem: Problem,
    tuning: OracleTuning,
    solution: Solution,
    tol: float = 1e-8,
) -> BoundReport:
    """The u -> 0 limit at beta = beta*, c = 1: twice the weighted penalty of
    the truth, and nothing else."""
    _require_unit_c(tuning)
    duals = tuning.dual_terms
    pen = _penalty_values(spec, problem.beta_star)
    n = problem.n
    rhs = 2.0 / n * float(np.sum(duals * pen))
    report = BoundReport(
        mode="special2",
        lhs=prediction_lhs(spec, problem, solution),
        rhs=rhs,
        u=None,
        candidate="beta_star",
        per_term=[
            {"dual": float(d), "penalty": 2.0 / n * float(d * pv), "credit": 0.0}
            for d, pv in zip(duals, pen)
        ],
        certified=solution.converged and _certify(spec, tuning),
    )
    return _finish(report, slack_allowance(problem, tol))


def la_loss(spec: EstimatorSpec, problem: Problem, a, beta: np.ndarray) -> float:
    """Balanced loss: prediction error plus a-weighted penalty values."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (spec.penalty.k,))
    beta = np.asarray(beta, dtype=float)
    diff = _error_image(spec, problem, problem.beta_star - beta)
    pen = _penalty_values(spec, beta)
    return float(diff @ diff) / problem.n + float(np.sum(a * pen)) / problem.n


def la_sharp_bound(
    spec: EstimatorSpec,
    problem: Problem,
    tuning: OracleTuning,
    solution: Solution,
    candidates=None,
    tol: float = 1e-8,
) -> BoundReport:
    """Sharp-factor bound on the balanced loss, premised on every c_j > 1.

    The weights are a_j = 2 (c_j - 1) dual_j and the factor is
    1 + max_j 4 dual_j / a_j. The minimum over candidates upper-bounds the
    true minimum, so the certified comparison is conservative-valid.
    """
    if np.any(tuning.c <= 1):
        raise InvalidPremiseError("the balanced-loss bound needs every c_j > 1")
    duals = tuning.dual_terms
    a = 2.0 * (tuning.c - 1.0) * duals
    factor = 1.0 + float(np.max(4.0 * duals / a))
    named = [("beta_star", problem.beta_star), ("zero", np.zeros(problem.p))]
    for i, cand in enumerate(candidates or []):
        named.append((f"candidate_{i}", np.asarray(cand, dtype=float)))
    label, best = None, math.inf
    for lab, cand in named:
        val = la_loss(spec, problem, a, cand)
        if val < best:
            label, best = lab, val
    report = BoundReport(
        mode="la",
        lhs=la_loss(spec, problem, a, solution.beta),
        rhs=factor * best,
        u=0.5,
        candidate=label,
        per_term=[{"dual": float(d), "a": float(av), "factor": factor} for d, av in zip(duals, a)],
        certified=solution.converged and _certify(spec, tuning),
    )
    return _finish(report, slack_allowance(problem, tol) * factor)


def check_bound(
    spec: EstimatorSpec,
    problem: Problem,
    tuning: OracleTuning,
    solution: Solution,
    mode: str,
    u: float = 0.5,
    beta=None,
    candidates=None,
    tol: float = 1e-8,
) -> BoundReport:
    """Certify lhs <= rhs + slack for one bound mode on a solved instance.

    Refuses unconverged solutions. A tuning that does not match the spec's
    lambdas still produces a report, flagged ``certified=False``.
    """
    if not solution.converged:
        raise CertificationError("refusing to certify an unconverged solution")
    if mode == "special1":
        return special1_bound(spec, problem, tuning, solution, candidates, tol)
    if mode == "special2":
        return special2_bound(spec, problem, tuning, solution, tol)
    if mode == "la":
        return la_sharp_bound(spec, problem, tuning, solution, candidates, tol)
    if mode == "theorem":
        cand = problem.beta_star if beta is None else np.asarray(beta, dtype=float)
        rhs = theorem_rhs(spec, problem, tuning, solution, cand, u)
        report = BoundReport(
            mode="theorem",
            lhs=prediction_lhs(spec, problem, solution),
            rhs=rhs,
            u=u if u > 0 else None,
            candidate="beta_star" if beta is None else "user",
            certified=solution.converged and _certify(spec, tuning),
        )
        return _finish(report, slack_allowance(problem, tol))
    raise InvalidInputError(f"unknown bound mode {mode!r}")
