"""Problem and estimator data model.

An estimator is a link function applied to the squared residual norm plus a
composite norm penalty: minimize  g(||Y - X b||^2) + sum_j lam_j N_j(M_j b).
The N_j are lq norms (or the sorted-l1 norm, which supports the slope
estimator through the same interfaces). Each term also carries a projection
matrix P_j so that sum_j P_j M_j^+ M_j = I, which attributes overlapping
coordinates to penalty terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import AssumptionViolationError, InvalidInputError

IDENTITY = "identity"
SQUARE_ROOT = "sqrt"


@dataclass(frozen=True)
class LinkFunction:
    """Map applied to the squared residual norm, with its derivative.

    Identity gives lasso-type objectives; square root gives square-root-lasso
    type objectives. Both satisfy g(0) = 0, g strictly increasing, and g' > 0
    non-increasing on (0, inf).
    """

    kind: str

    def value(self, x: float) -> float:
        if x < 0:
            raise InvalidInputError("link argument must be nonnegative")
        return float(x) if self.kind == IDENTITY else math.sqrt(x)

    def derivative(self, x: float) -> float:
        if not x > 0:
            raise InvalidInputError("link derivative needs a positive argument")
        return 1.0 if self.kind == IDENTITY else 0.5 / math.sqrt(x)


def link_function(kind: str) -> LinkFunction:
    if kind not in (IDENTITY, SQUARE_ROOT):
        raise InvalidInputError(f"unknown link function {kind!r}")
    return LinkFunction(kind)


class LqNorm:
    """The lq norm for q >= 1 (q = inf allowed)."""

    kind = "lq"

    def __init__(self, q: float):
        if not q >= 1:
            raise InvalidInputError("norm exponent must satisfy q >= 1")
        self.q = float(q)

    def value(self, v: np.ndarray) -> float:
        return linalg.lq_norm(v, self.q)

    def dual_value(self, v: np.ndarray) -> float:
        return linalg.dual_norm(v, self.q)

    def __repr__(self):
        return f"LqNorm(q={self.q})"


class SortedL1Norm:
    """Sorted-l1 norm: sum of non-increasing positive weights times |v| sorted
    in decreasing order. Its dual norm is the largest ratio of cumulative
    sorted absolute values to cumulative weights."""

    kind = "sorted_l1"

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InvalidInputError("sorted-l1 weights must be a nonempty vector")
        if np.any(w <= 0) or np.any(np.diff(w) > 0):
            raise InvalidInputError("sorted-l1 weights must be positive and non-increasing")
        self.weights = w

    def value(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=float)
        if v.shape != self.weights.shape:
            raise InvalidInputError("vector length must match the weight vector")
        return float(self.weights @ np.sort(np.abs(v))[::-1])

    def dual_value(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=float)
        if v.shape != self.weights.shape:
            raise InvalidInputError("vector length must match the weight vector")
        ratios = np.cumsum(np.sort(np.abs(v))[::-1]) / np.cumsum(self.weights)
        return float(np.max(ratios))

    def __repr__(self):
        return f"SortedL1Norm(p={self.weights.size})"


@dataclass(frozen=True)
class PenaltyTerm:
    """One composite-norm term: lam * N(M b), attributed through P."""

    matrix: np.ndarray          # M, p x p
    norm: object                # LqNorm or SortedL1Norm
    projection: np.ndarray      # P, p x p
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidInputError("tuning parameter must be positive")


class PenaltySpec:
    """Ordered penalty terms with cached pseudoinverses.

    Validates that the stacked penalty matrices have a trivial common kernel
    and that the projections satisfy the partition identity. Penalties whose
    matrices are intentionally rank deficient (total-variation differencing,
    where the theory proceeds through a vanishing-ridge limit) set
    ``kernel_deficient`` and skip both checks; those specs cannot use the
    zeroing threshold.
    """

    def __init__(self, terms, kernel_deficient: bool = False):
        terms = list(terms)
        if not terms:
            raise InvalidInputError("penalty needs at least one term")
        p = terms[0].matrix.shape[1]
        for t in terms:
            if t.matrix.shape != (p, p) or t.projection.shape != (p, p):
                raise InvalidInputError("penalty matrices must be square and share dimension")
        self.terms = terms
        self.kernel_deficient = bool(kernel_deficient)
        self._projector = None
        self.pinvs = [linalg.pseudoinverse(t.matrix) for t in terms]
        if not self.kernel_deficient:
            if not linalg.kernels_intersect_trivially([t.matrix for t in terms]):
                raise AssumptionViolationError(
                    "penalty matrices have a nontrivial common kernel"
                )
            if not linalg.verify_partition(
                [(t.matrix, t.projection) for t in terms], 1e-8
            ):
                raise AssumptionViolationError("projections do not satisfy the partition identity")

    @property
    def k(self) -> int:
        return len(self.terms)

    @property
    def p(self) -> int:
        return self.terms[0].matrix.shape[1]

    def error_projector(self) -> np.ndarray | None:
        """Orthogonal projector onto the joint row space of the M_j.

        None when the common kernel is trivial (the projector would be the
        identity). Rank-deficient penalties leave their kernel directions
        unpenalized, so prediction-error certificates apply in this
        quotient; see the bounds module.
        """
        if not self.kernel_deficient:
            return None
        if getattr(self, "_projector", None) is None:
            stacked = np.vstack([t.matrix for t in self.terms])
            _, s, vt = np.linalg.svd(stacked)
            keep = s > 1e-12 * s[0] if s.size and s[0] > 0 else np.zeros(0, dtype=bool)
            rows = vt[: int(np.sum(keep))]
            self._projector = rows.T @ rows
        return self._projector

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([t.lam for t in self.terms])

    def with_lambdas(self, lams) -> "PenaltySpec":
        lams = np.asarray(lams, dtype=float)
        if lams.shape != (self.k,):
            raise InvalidInputError("need one tuning value per penalty term")
        new = object.__new__(PenaltySpec)
        new.terms = [
            PenaltyTerm(t.matrix, t.norm, t.projection, float(l))
            for t, l in zip(self.terms, lams)
        ]
        new.kernel_deficient = self.kernel_deficient
        new._projector = getattr(self, "_projector", None)
        new.pinvs = self.pinvs
        return new

    def value(self, beta: np.ndarray) -> float:
        return float(sum(t.lam * t.norm.value(t.matrix @ beta) for t in self.terms))


@dataclass(frozen=True)
class Problem:
    """Design X, response Y, and (for oracle experiments) the ground truth."""

    x: np.ndarray
    y: np.ndarray
    beta_star: np.ndarray | None = None
    eps: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise InvalidInputError("X must be n x p and Y length n")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInputError("problem data has non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if np.all(y == 0):
            raise AssumptionViolationError("Y = 0 is excluded by the noise assumption")
        if (self.beta_star is None) != (self.eps is None):
            raise InvalidInputError("ground truth needs both beta_star and eps")
        if self.beta_star is not None:
            bs = np.asarray(self.beta_star, dtype=float)
            ep = np.asarray(self.eps, dtype=float)
            if bs.shape != (x.shape[1],) or ep.shape != (y.shape[0],):
                raise InvalidInputError("ground-truth shapes do not match the design")
            scale = 1.0 + float(np.max(np.abs(y)))
            if np.max(np.abs(x @ bs + ep - y)) > 1e-8 * scale:
                raise InvalidInputError("Y does not equal X beta_star + eps")
            object.__setattr__(self, "beta_star", bs)
            object.__setattr__(self, "eps", ep)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def has_truth(self) -> bool:
        return self.beta_star is not None


@dataclass(frozen=True)
class EstimatorSpec:
    """A link function plus a penalty: everything that defines one estimator."""

    link: LinkFunction
    penalty: PenaltySpec
    name: str = "custom"
    # total-variation/differencing estimators are defined against X = I
    requires_identity_design: bool = False

    def with_lambdas(self, lams) -> "EstimatorSpec":
        return EstimatorSpec(
            self.link, self.penalty.with_lambdas(lams), self.name, self.requires_identity_design
        )


def objective(spec: EstimatorSpec, problem: Problem, beta: np.ndarray) -> float:
    """g(||Y - X b||^2) plus the composite penalty value at b."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (problem.p,):
        raise InvalidInputError("beta length does not match the design")
    if problem.p != spec.penalty.p:
        raise InvalidInputError("penalty dimension does not match the design")
    r = problem.y - problem.x @ beta
    return spec.link.value(float(r @ r)) + spec.penalty.value(beta)


def _identity_term(p: int, norm, lam: float) -> PenaltyTerm:
    eye = np.eye(p)
    return PenaltyTerm(eye, norm, eye, lam)


def make_lasso(p: int, lam: float) -> EstimatorSpec:
    """l1-penalized squared-error regression (one term, M = P = I)."""
    spec = PenaltySpec([_identity_term(p, LqNorm(1), lam)])
    return EstimatorSpec(link_function(IDENTITY), spec, name="lasso")


def make_sqrt_lasso(p: int, lam: float) -> EstimatorSpec:
    """l1-penalized residual-norm regression (square-root link)."""
    spec = PenaltySpec([_identity_term(p, LqNorm(1), lam)])
    return EstimatorSpec(link_function(SQUARE_ROOT), spec, name="sqrt-lasso")


def make_tailored_lasso(p: int, lams) -> EstimatorSpec:
    """Per-coordinate tuning: p singleton-indicator terms, each with its own lam."""
    lams = np.asarray(lams, dtype=float)
    if lams.shape != (p,):
        raise InvalidInputError("need one tuning value per coordinate")
    eye = np.eye(p)
    terms = []
    for i in range(p):
        m = np.zeros((p, p))
        m[i, i] = 1.0
        terms.append(PenaltyTerm(m, LqNorm(1), eye, float(lams[i])))
    return EstimatorSpec(link_function(IDENTITY), PenaltySpec(terms), name="tailored-lasso")


def _group_matrices(groups, p: int):
    mats = []
    covered = np.zeros(p, dtype=bool)
    for g in groups:
        idx = np.asarray(sorted(g), dtype=int)
        if idx.size == 0 or idx.min() < 0 or idx.max() >= p:
            raise InvalidInputError("group indices must be nonempty subsets of 0..p-1")
        m = np.zeros((p, p))
        m[idx, idx] = 1.0
        mats.append(m)
        covered[idx] = True
    if not covered.all():
        raise AssumptionViolationError("groups must cover every coordinate")
    return mats


def make_group_lasso(groups, lam, link: str = IDENTITY, p: int | None = None) -> EstimatorSpec:
    """Group-indicator terms with l2 norms; ``lam`` is a scalar shared by all
    groups or one value per group. Groups are 0-based index collections whose
    union must be all coordinates."""
    groups = [sorted(g) for g in groups]
    if p is None:
        p = max(max(g) for g in groups) + 1
    mats = _group_matrices(groups, p)
    lams = np.broadcast_to(np.asarray(lam, dtype=float), (len(groups),))
    projections = linalg.default_projections(mats)
    terms = [
        PenaltyTerm(m, LqNorm(2), proj, float(l))
        for m, proj, l in zip(mats, projections, lams)
    ]
    name = "group-lasso" if link == IDENTITY else "group-sqrt-lasso"
    return EstimatorSpec(link_function(link), PenaltySpec(terms), name=name)


def make_fused(p: int, lam: float) -> EstimatorSpec:
    """Total-variation penalty |D b|_1 against an identity design."""
    return make_trend_filter(p, 1, lam)


def make_trend_filter(p: int, order: int, lam: float) -> EstimatorSpec:
    """l1 penalty on repeated differences of b, for difference order 1..3."""
    if order not in (1, 2, 3):
        raise InvalidInputError("trend filtering supports difference orders 1..3")
    m = linalg.difference_matrix(p, order)
    term = PenaltyTerm(m, LqNorm(1), np.eye(p), lam)
    spec = PenaltySpec([term], kernel_deficient=True)
    name = "fused" if order == 1 else "trend-filter"
    return EstimatorSpec(
        link_function(IDENTITY), spec, name=name, requires_identity_design=True
    )


def make_slope(weights, lam: float, link: str = IDENTITY) -> EstimatorSpec:
    """Sorted-l1 penalty with non-increasing positive weights."""
    norm = SortedL1Norm(np.asarray(weights, dtype=float) * 1.0)
    spec = PenaltySpec([_identity_term(norm.weights.size, norm, lam)])
    return EstimatorSpec(link_function(link), spec, name="slope")


def make_elastic_net_augmented(problem: Problem, lambda1: float, lambda2: float):
    """Rewrite the l1 + squared-l2 penalty as a lasso on augmented data.

    Appends sqrt(lambda2) * I rows to X and zeros to Y. When ground truth is
    present the augmented noise is [eps; -sqrt(lambda2) * beta_star], so the
    augmented model identity Y_aug = X_aug beta_star + eps_aug holds exactly
    and the augmented cross-noise vector is X^T eps - lambda2 * beta_star.
    """
    if lambda2 < 0:
        raise InvalidInputError("ridge weight must be nonnegative")
    if lambda2 == 0:
        spec = make_lasso(problem.p, lambda1)
        return EstimatorSpec(spec.link, spec.penalty, name="elastic-net"), problem
    root = math.sqrt(lambda2)
    x_aug = np.vstack([problem.x, root * np.eye(problem.p)])
    y_aug = np.concatenate([problem.y, np.zeros(problem.p)])
    if problem.has_truth:
        eps_aug = np.concatenate([problem.eps, -root * problem.beta_star])
        aug = Problem(x_aug, y_aug, problem.beta_star, eps_aug, seed=problem.seed)
    else:
        aug = Problem(x_aug, y_aug, seed=problem.seed)
    spec = make_lasso(problem.p, lambda1)
    return EstimatorSpec(spec.link, spec.penalty, name="elastic-net"), aug
