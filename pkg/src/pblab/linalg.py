"""Dense linear-algebra kernel.

Moore-Penrose pseudoinverses, lq/dual norms with the q = inf sentinel,
finite-difference matrices and their explicit pseudoinverse, and the
projection-identity machinery used to attribute overlapping penalties.

Everything here is a pure function of immutable numpy inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import AssumptionViolationError, InvalidInputError

# Relative singular-value cutoff used when no explicit tolerance is given.
DEFAULT_PINV_TOL = 1e-12

# Numerical rank tolerance for the stacked kernel-intersection check.
KERNEL_RANK_TOL = 1e-10


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a 2-d array with at least one row and column")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


def _as_vector(v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be a 1-d array")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return v


def pseudoinverse(a: np.ndarray, tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``tol * max_singular_value`` are treated as zero.
    Satisfies the four Penrose conditions up to numerical precision.
    """
    a = _as_matrix(a)
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    return np.linalg.pinv(a, rcond=tol)


def lq_norm(v: np.ndarray, q: float) -> float:
    """The lq norm of a vector, with ``q = inf`` meaning the max norm."""
    v = _as_vector(v)
    if not q >= 1:
        raise InvalidInputError("norm exponent must satisfy q >= 1")
    if v.size == 0:
        return 0.0
    if np.isinf(q):
        return float(np.max(np.abs(v)))
    if q == 1:
        return float(np.sum(np.abs(v)))
    if q == 2:
        return float(np.linalg.norm(v))
    # scale out the max entry so v**q cannot overflow for large q
    m = float(np.max(np.abs(v)))
    if m == 0.0:
        return 0.0
    return float(m * np.sum((np.abs(v) / m) ** q) ** (1.0 / q))


def dual_exponent(q: float) -> float:
    """The conjugate exponent p with 1/p + 1/q = 1."""
    if not q >= 1:
        raise InvalidInputError("norm exponent must satisfy q >= 1")
    if q == 1:
        return np.inf
    if np.isinf(q):
        return 1.0
    return q / (q - 1.0)


def dual_norm(v: np.ndarray, q: float) -> float:
    """Dual norm of the lq norm: the lp norm with 1/p + 1/q = 1.

    q = 1 gives the max norm, q = 2 is self dual, q = inf gives the l1 norm.
    """
    return lq_norm(v, dual_exponent(q))


def difference_matrix(p: int, order: int = 1) -> np.ndarray:
    """p x p forward-difference matrix, raised to ``order``.

    The first-order matrix has -1 on the diagonal and +1 on the first
    superdiagonal for rows 1..p-1; the last row is all zeros. Higher
    orders are plain matrix powers of it.
    """
    if p < 2:
        raise InvalidInputError("difference matrix needs p >= 2")
    if order < 1:
        raise InvalidInputError("difference order must be >= 1")
    d = np.zeros((p, p))
    idx = np.arange(p - 1)
    d[idx, idx] = -1.0
    d[idx, idx + 1] = 1.0
    return np.linalg.matrix_power(d, order)


def fused_pinv(p: int) -> np.ndarray:
    """Closed-form pseudoinverse of the first-order difference matrix.

    Entry (i, j), 1-based: (j - p) / p for i <= j < p, j / p for i > j < p,
    and 0 in the last column. Agrees with ``pseudoinverse(difference_matrix(p))``
    to tight tolerance; kept as an independent closed form for cross-checks.
    """
    if p < 2:
        raise InvalidInputError("fused pseudoinverse needs p >= 2")
    out = np.zeros((p, p))
    for i in range(1, p + 1):
        for j in range(1, p):
            out[i - 1, j - 1] = (j - p) / p if i <= j else j / p
    return out


def _pinv_product(m: np.ndarray) -> np.ndarray:
    """M^+ M, the orthogonal projector onto the row space of M."""
    return pseudoinverse(m) @ m


def verify_partition(terms, tol: float = KERNEL_RANK_TOL) -> bool:
    """Check that sum_j P_j M_j^+ M_j equals the identity to max-norm ``tol``.

    ``terms`` is a sequence of (M, P) pairs of p x p matrices.
    """
    if not terms:
        raise InvalidInputError("need at least one (M, P) pair")
    mats = [(_as_matrix(m, "M"), _as_matrix(pmat, "P")) for m, pmat in terms]
    p = mats[0][0].shape[1]
    for m, pmat in mats:
        if m.shape != (p, p) or pmat.shape != (p, p):
            raise InvalidInputError("all partition matrices must be square with matching size")
    total = sum(pmat @ _pinv_product(m) for m, pmat in mats)
    return bool(np.max(np.abs(total - np.eye(p))) <= tol)


def kernels_intersect_trivially(mats, tol: float = KERNEL_RANK_TOL) -> bool:
    """True iff the stacked matrix [M_1; ...; M_k] has full column rank p."""
    mats = [_as_matrix(m) for m in mats]
    p = mats[0].shape[1]
    if any(m.shape[1] != p for m in mats):
        raise InvalidInputError("penalty matrices must share the column dimension")
    stacked = np.vstack(mats)
    s = np.linalg.svd(stacked, compute_uv=False)
    rank = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    return rank == p


def nonzero_rows(m: np.ndarray) -> np.ndarray:
    """Boolean mask of rows of M that are not identically zero."""
    m = _as_matrix(m)
    return np.max(np.abs(m), axis=1) > 0


def default_projections(mats, tol: float = KERNEL_RANK_TOL):
    """Construct projection matrices P_j with sum_j P_j M_j^+ M_j = I.

    Identity matrices are returned when k = 1 or when they already satisfy
    the identity (disjoint row spaces). Otherwise each coordinate is
    assigned to the lowest-index term whose M_j has a nonzero row there
    ("first owner"), yielding diagonal 0/1 projections.
    """
    mats = [_as_matrix(m) for m in mats]
    p = mats[0].shape[1]
    if not kernels_intersect_trivially(mats, tol):
        raise AssumptionViolationError(
            "penalty matrices have a nontrivial common kernel; some direction is unpenalized"
        )
    eye = np.eye(p)
    if len(mats) == 1:
        return [eye]
    identities = [eye] * len(mats)
    if verify_partition(list(zip(mats, identities)), tol):
        return identities
    owner = np.full(p, -1, dtype=int)
    for j, m in enumerate(mats):
        covered = nonzero_rows(m)
        fresh = covered & (owner < 0)
        owner[fresh] = j
    if np.any(owner < 0):
        raise AssumptionViolationError("some coordinate is not covered by any penalty matrix")
    projections = [np.diag((owner == j).astype(float)) for j in range(len(mats))]
    if not verify_partition(list(zip(mats, projections)), tol):
        raise AssumptionViolationError(
            "first-owner projections do not satisfy the partition identity for these matrices"
        )
    return projections
