"""Convex solvers for the penalized objectives, with KKT certificates.

Dispatch by penalty structure:

* separable diagonal penalties (l1 coordinates and disjoint l2 blocks,
  covering the plain, tailored, and group variants) -> cyclic block
  coordinate descent,
* a single sorted-l1 term -> monotone accelerated proximal gradient,
* a single l1 term with a general matrix inside -> ADMM splitting on the
  auxiliary variable z = M b, with an active-pattern polishing step,
* square-root link -> outer alternation: freeze the residual norm, solve the
  identity-link problem with the penalty rescaled by twice that norm, repeat.

Every path certifies its output through ``kkt_residual``: the Euclidean
distance from zero to the objective's subdifferential at the candidate
(computed exactly for lq penalties; for sorted-l1 terms the certificate is
the proximal gradient-mapping norm, which vanishes exactly at minimizers and
never exceeds the subdifferential distance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from .errors import DegenerateInputError, InvalidInputError
from .model import (
    IDENTITY,
    SQUARE_ROOT,
    EstimatorSpec,
    LqNorm,
    Problem,
    SortedL1Norm,
    objective,
)

# relative residual below which the square-root link is considered degenerate
RESIDUAL_FLOOR = 1e-12

# relative threshold deciding whether a penalized quantity counts as zero
# when classifying active/inactive pieces of the subdifferential
ACTIVITY_RTOL = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 100_000
    restarts: int = 2
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidInputError("solver tolerance must be positive")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be at least 1")


@dataclass
class Solution:
    beta: np.ndarray
    fitted: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    # running best objective, one entry per outer sweep/iteration
    objective_trace: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# proximal operators


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Componentwise sign(v) * max(|v| - t, 0), the prox of t * |.|_1."""
    if t < 0:
        raise InvalidInputError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def group_soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Scale the whole block toward zero: max(1 - t/|v|_2, 0) * v."""
    if t < 0:
        raise InvalidInputError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    nrm = float(np.linalg.norm(v))
    if nrm <= t:
        return np.zeros_like(v)
    return (1.0 - t / nrm) * v


def _pav_nonincreasing(z: np.ndarray) -> np.ndarray:
    """Least-squares projection onto non-increasing sequences (pool adjacent violators)."""
    means: list[float] = []
    counts: list[int] = []
    for val in z:
        cur_m, cur_c = float(val), 1
        # merge backwards while the stack would increase
        while means and means[-1] < cur_m:
            pm, pc = means.pop(), counts.pop()
            cur_m = (pm * pc + cur_m * cur_c) / (pc + cur_c)
            cur_c += pc
        means.append(cur_m)
        counts.append(cur_c)
    out = np.empty(z.size)
    pos = 0
    for m, c in zip(means, counts):
        out[pos : pos + c] = m
        pos += c
    return out


def slope_prox(v: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Prox of the sorted-l1 norm with the given non-increasing weights.

    Sort |v| decreasingly, subtract the weights, project onto the
    non-increasing nonnegative cone, then undo the sort and restore signs.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(np.diff(w) > 0) or np.any(w < 0):
        raise InvalidInputError("sorted-l1 weights must be non-increasing and nonnegative")
    v = np.asarray(v, dtype=float)
    if v.shape != w.shape:
        raise InvalidInputError("vector and weights must have the same length")
    order = np.argsort(-np.abs(v), kind="stable")
    z = np.abs(v)[order] - w
    x = np.maximum(_pav_nonincreasing(z), 0.0)
    out = np.zeros_like(v)
    out[order] = x
    return np.sign(v) * out


# ---------------------------------------------------------------------------
# penalty compilation


@dataclass
class _Separable:
    l1_weights: np.ndarray  # per-coordinate l1 weight, lam folded in
    blocks: list            # (coords int array, lam) with pairwise-disjoint coords


@dataclass
class _Slope:
    weights: np.ndarray     # lam * norm weights


@dataclass
class _MatrixL1:
    m: np.ndarray
    lam: float


def _is_diagonal(m: np.ndarray) -> bool:
    return np.count_nonzero(m - np.diag(np.diag(m))) == 0


def _compile_penalty(penalty):
    """Classify the penalty into one of the solvable structures."""
    terms = penalty.terms
    if len(terms) == 1 and isinstance(terms[0].norm, SortedL1Norm):
        t = terms[0]
        if not np.array_equal(t.matrix, np.eye(t.matrix.shape[0])):
            raise InvalidInputError("sorted-l1 penalties are only supported with M = I")
        return _Slope(t.lam * t.norm.weights)
    if all(isinstance(t.norm, LqNorm) and _is_diagonal(t.matrix) for t in terms):
        p = penalty.p
        l1 = np.zeros(p)
        blocks = []
        blocked = np.zeros(p, dtype=bool)
        for t in terms:
            d = np.diag(t.matrix)
            if t.norm.q == 1:
                l1 += t.lam * np.abs(d)
            elif t.norm.q == 2:
                coords = np.flatnonzero(d)
                if not np.all(np.isin(d[coords], [1.0])):
                    raise InvalidInputError("l2 blocks must use 0/1 indicator matrices")
                if blocked[coords].any():
                    raise InvalidInputError("overlapping l2 blocks are not solvable here")
                blocked[coords] = True
                blocks.append((coords, t.lam))
            else:
                raise InvalidInputError(f"no solver for diagonal penalties with q={t.norm.q}")
        if np.any(l1[blocked] > 0):
            raise InvalidInputError("coordinates cannot carry both l1 and block penalties")
        return _Separable(l1, blocks)
    if len(terms) == 1 and isinstance(terms[0].norm, LqNorm) and terms[0].norm.q == 1:
        return _MatrixL1(terms[0].matrix, terms[0].lam)
    raise InvalidInputError("penalty structure not supported by the solver")


def _scale_compiled(compiled, factor: float):
    if isinstance(compiled, _Separable):
        return _Separable(compiled.l1_weights * factor, [(c, lam * factor) for c, lam in compiled.blocks])
    if isinstance(compiled, _Slope):
        return _Slope(compiled.weights * factor)
    return _MatrixL1(compiled.m, compiled.lam * factor)


def _compiled_value(compiled, beta: np.ndarray) -> float:
    if isinstance(compiled, _Separable):
        val = float(compiled.l1_weights @ np.abs(beta))
        for coords, lam in compiled.blocks:
            val += lam * float(np.linalg.norm(beta[coords]))
        return val
    if isinstance(compiled, _Slope):
        return float(compiled.weights @ np.sort(np.abs(beta))[::-1])
    return compiled.lam * float(np.sum(np.abs(compiled.m @ beta)))


# ---------------------------------------------------------------------------
# exact KKT residuals per structure


def _activity_floor(values: np.ndarray) -> float:
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return ACTIVITY_RTOL * (1.0 + scale)


def _separable_kkt(v: np.ndarray, beta: np.ndarray, pen: _Separable) -> float:
    """Distance from -v to the compiled penalty's subdifferential at beta."""
    floor = _activity_floor(beta)
    total = 0.0
    in_block = np.zeros(beta.size, dtype=bool)
    for coords, lam in pen.blocks:
        in_block[coords] = True
        bg = beta[coords]
        vg = v[coords]
        if np.linalg.norm(bg) > floor:
            total += float(np.sum((vg + lam * bg / np.linalg.norm(bg)) ** 2))
        else:
            total += max(float(np.linalg.norm(vg)) - lam, 0.0) ** 2
    w = pen.l1_weights
    free = ~in_block
    bi = beta[free]
    vi = v[free]
    wi = w[free]
    active = np.abs(bi) > floor
    total += float(np.sum((vi[active] + wi[active] * np.sign(bi[active])) ** 2))
    total += float(np.sum(np.maximum(np.abs(vi[~active]) - wi[~active], 0.0) ** 2))
    return math.sqrt(total)


def _matrix_l1_kkt(v: np.ndarray, beta: np.ndarray, pen: _MatrixL1) -> float:
    """Exact distance via box-constrained least squares on the free subgradients."""
    mb = pen.m @ beta
    floor = _activity_floor(mb)
    active = np.abs(mb) > floor
    fixed = pen.lam * (pen.m[active].T @ np.sign(mb[active]))
    target = -(v + fixed)
    free_rows = pen.m[~active]
    if free_rows.shape[0] == 0:
        return float(np.linalg.norm(target))
    a = pen.lam * free_rows.T
    res = lsq_linear(a, target, bounds=(-1.0, 1.0), tol=1e-14)
    return float(np.linalg.norm(a @ res.x - target))


def _slope_kkt(x: np.ndarray, v: np.ndarray, beta: np.ndarray, pen: _Slope, gprime: float) -> float:
    """Gradient-mapping norm at step 1/L; zero iff beta minimizes."""
    smax = _spectral_norm_sq(x)
    lip = 2.0 * gprime * smax if smax > 0 else 1.0
    step = 1.0 / lip
    prox = slope_prox(beta - step * v, step * pen.weights)
    return float(np.linalg.norm(beta - prox) * lip)


def _spectral_norm_sq(x: np.ndarray) -> float:
    return float(np.linalg.svd(x, compute_uv=False)[0] ** 2)


def _smooth_gradient(spec: EstimatorSpec, x: np.ndarray, y: np.ndarray, beta: np.ndarray):
    """Gradient of g(|Y - X b|^2); also returns g'(r^2) and the residual."""
    r = y - x @ beta
    rsq = float(r @ r)
    if spec.link.kind == SQUARE_ROOT:
        if math.sqrt(rsq) < RESIDUAL_FLOOR * np.linalg.norm(y):
            raise DegenerateInputError(
                "residual vanished: the square-root link derivative is unbounded here"
            )
        gp = spec.link.derivative(rsq)
    else:
        gp = 1.0
    return -2.0 * gp * (x.T @ r), gp, r


def kkt_residual(spec: EstimatorSpec, problem: Problem, beta: np.ndarray) -> float:
    """Distance from zero to the objective's subdifferential at beta.

    For lq penalties this is exact (coordinate/block-wise projection, or a
    box-constrained least-squares solve when the penalty matrix is not
    diagonal). For sorted-l1 terms the proximal gradient-mapping norm is
    returned instead; it is zero exactly at minimizers and is a lower bound
    on the subdifferential distance.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (problem.p,):
        raise InvalidInputError("beta length does not match the design")
    v, gp, _ = _smooth_gradient(spec, problem.x, problem.y, beta)
    compiled = _compile_penalty(spec.penalty)
    if isinstance(compiled, _Separable):
        return _separable_kkt(v, beta, compiled)
    if isinstance(compiled, _MatrixL1):
        return _matrix_l1_kkt(v, beta, compiled)
    return _slope_kkt(problem.x, v, beta, compiled, gp)


# ---------------------------------------------------------------------------
# identity-link solvers (smooth part |Y - X b|^2)


def _cd_separable(x, y, pen: _Separable, beta0, tol, max_sweeps, order):
    """Cyclic block coordinate descent; exact updates on l1 coordinates,
    majorized prox steps on l2 blocks."""
    n, p = x.shape
    beta = beta0.copy()
    r = y - x @ beta
    colsq = np.einsum("ij,ij->j", x, x)
    in_block = np.zeros(p, dtype=bool)
    blocks = []
    for coords, lam in pen.blocks:
        in_block[coords] = True
        xg = x[:, coords]
        gram = xg.T @ xg
        smax = float(np.linalg.eigvalsh(gram)[-1]) if coords.size > 1 else float(gram[0, 0])
        blocks.append((coords, lam, xg, max(smax, 1e-300)))
    singles = [i for i in order if not in_block[i]]
    block_order = [b for b in blocks]
    trace = []
    best_beta = beta.copy()
    best_val = float(r @ r) + _compiled_value(pen, beta)

    def sweep(active_only: bool) -> float:
        nonlocal beta, r
        delta_max = 0.0
        for i in singles:
            if active_only and beta[i] == 0.0:
                continue
            ci = colsq[i]
            if ci == 0.0:
                if pen.l1_weights[i] > 0 and beta[i] != 0.0:
                    r += x[:, i] * beta[i]
                    beta[i] = 0.0
                continue
            bi = beta[i]
            z = float(x[:, i] @ r) + ci * bi
            thr = pen.l1_weights[i] / 2.0
            nb = math.copysign(max(abs(z) - thr, 0.0), z) / ci
            if nb != bi:
                r += x[:, i] * (bi - nb)
                beta[i] = nb
                delta_max = max(delta_max, abs(nb - bi))
        for coords, lam, xg, smax in block_order:
            bg = beta[coords]
            if active_only and not bg.any():
                continue
            u = bg + (xg.T @ r) / smax
            nb = group_soft_threshold(u, lam / (2.0 * smax))
            step = bg - nb
            if step.any():
                r += xg @ step
                beta[coords] = nb
                delta_max = max(delta_max, float(np.max(np.abs(step))))
        return delta_max

    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        sweep(False)
        sweeps += 1
        val = float(r @ r) + _compiled_value(pen, beta)
        if val < best_val:
            best_val, best_beta = val, beta.copy()
        trace.append(best_val)
        res = _separable_kkt(-2.0 * (x.T @ r), beta, pen)
        if res <= tol:
            converged = True
            break
        # cheap active-set passes between full sweeps
        inner = 0
        while inner < 10 and sweeps < max_sweeps:
            if sweep(True) == 0.0:
                break
            sweeps += 1
            inner += 1
    return best_beta if not converged else beta, sweeps, converged, trace


def _slope_pattern_polish(x, y, weights, beta):
    """Solve the sorted-l1 problem restricted to the sign/cluster pattern of beta.

    Entries of |beta| are grouped into tied clusters; within the pattern the
    penalty is linear, so the restricted problem is a small least squares.
    Returns None when the pattern is empty or the solution violates it.
    """
    absb = np.abs(beta)
    scale = float(absb.max()) if absb.size else 0.0
    if scale == 0.0:
        return None
    support = np.flatnonzero(absb > 1e-9 * scale)
    order = support[np.argsort(-absb[support], kind="stable")]
    vals = absb[order]
    breaks = np.flatnonzero(np.diff(vals) < -1e-6 * scale)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks + 1, [order.size]])
    signs = np.sign(beta[order])
    cols = []
    wsum = []
    for a, b in zip(starts, ends):
        idx = order[a:b]
        cols.append(x[:, idx] @ signs[a:b])
        wsum.append(float(np.sum(weights[a:b])))
    a_mat = np.column_stack(cols)
    rhs = 2.0 * (a_mat.T @ y) - np.asarray(wsum)
    t, *_ = np.linalg.lstsq(2.0 * (a_mat.T @ a_mat), rhs, rcond=None)
    if np.any(t <= 0) or np.any(np.diff(t) >= 0):
        return None
    out = np.zeros_like(beta)
    for (a, b), tc in zip(zip(starts, ends), t):
        out[order[a:b]] = signs[a:b] * tc
    return out


def _fista_slope(x, y, pen: _Slope, beta0, tol, max_iter):
    """Accelerated proximal gradient with gradient-scheme restart.

    Tracks the best iterate so the reported objective never increases, and
    periodically tries an exact pattern polish, accepting it only when the
    gradient-mapping certificate passes."""
    lip = 2.0 * _spectral_norm_sq(x)
    if lip == 0.0:
        lip = 1.0
    step = 1.0 / lip
    xt = x.T

    def grad(b):
        return -2.0 * (xt @ (y - x @ b))

    def fval(b):
        r = y - x @ b
        return float(r @ r) + _compiled_value(pen, b)

    def mapping_norm(b):
        prox = slope_prox(b - step * grad(b), step * pen.weights)
        return float(np.linalg.norm(b - prox) * lip)

    beta = beta0.copy()
    zk = beta.copy()
    tk = 1.0
    best = beta.copy()
    best_val = fval(beta)
    trace = [best_val]
    converged = False
    it = 0
    while it < max_iter:
        cand = slope_prox(zk - step * grad(zk), step * pen.weights)
        it += 1
        if float((zk - cand) @ (cand - beta)) > 0.0:
            # momentum points uphill: restart from the last iterate
            zk = beta.copy()
            tk = 1.0
            cand = slope_prox(zk - step * grad(zk), step * pen.weights)
            it += 1
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        zk = cand + ((tk - 1.0) / t_next) * (cand - beta)
        beta = cand
        tk = t_next
        val = fval(beta)
        if val < best_val:
            best_val = val
            best = beta
        trace.append(best_val)
        if it % 10 == 0 or it >= max_iter:
            if mapping_norm(best) <= tol:
                converged = True
                break
            if it % 50 == 0:
                polished = _slope_pattern_polish(x, y, pen.weights, best)
                if polished is not None:
                    pval = fval(polished)
                    # allow objective rounding noise; the certificate decides
                    if pval <= best_val + 1e-10 * (1 + abs(best_val)) and mapping_norm(polished) <= tol:
                        best = polished
                        best_val = min(best_val, pval)
                        trace.append(best_val)
                        converged = True
                        break
    return best, it, converged, trace


def _admm_matrix_l1(x, y, pen: _MatrixL1, beta0, tol, max_iter):
    """Splitting on z = M b with an active-pattern polishing step.

    The polish solves the equality-constrained least-squares problem implied
    by the current sign pattern of z; its output has exact zeros where the
    pattern says so, which makes the box-constrained KKT check meaningful.
    """
    m, lam = pen.m, pen.lam
    p = x.shape[1]
    xtx2 = 2.0 * (x.T @ x)
    xty2 = 2.0 * (x.T @ y)
    mtm = m.T @ m
    rho = max(lam, 1e-6)

    def factor(r):
        return np.linalg.cholesky(xtx2 + r * mtm)

    try:
        chol = factor(rho)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError(
            "design and penalty matrix share a null direction; the splitting solve is singular"
        ) from exc

    def solve_chol(rhs):
        return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))

    beta = beta0.copy()
    z = m @ beta
    u = np.zeros_like(z)

    def fval(b):
        r = y - x @ b
        return float(r @ r) + lam * float(np.sum(np.abs(m @ b)))

    best = beta.copy()
    best_val = fval(beta)
    best_res = math.inf
    trace = [best_val]
    converged = False
    it = 0

    def polish_and_check(zpat):
        nonlocal best, best_val, best_res
        active = zpat != 0.0
        signs = np.sign(zpat[active])
        rhs_lin = xty2 - lam * (m[active].T @ signs)
        if active.all():
            cand, *_ = np.linalg.lstsq(xtx2, rhs_lin, rcond=None)
        else:
            from scipy.linalg import null_space

            ns = null_space(m[~active], rcond=1e-12)
            if ns.shape[1] == 0:
                cand = np.zeros(p)
            else:
                a2 = ns.T @ xtx2 @ ns
                gam, *_ = np.linalg.lstsq(a2, ns.T @ rhs_lin, rcond=None)
                cand = ns @ gam
        res = _matrix_l1_kkt(-2.0 * (x.T @ (y - x @ cand)), cand, pen)
        if res < best_res:
            best_res = res
            best = cand
            best_val = min(best_val, fval(cand))
        return res

    while it < max_iter:
        beta = solve_chol(xty2 + rho * (m.T @ (z - u)))
        mb = m @ beta
        z_new = soft_threshold(mb + u, lam / rho)
        du = mb - z_new
        u += du
        dual = rho * float(np.linalg.norm(m.T @ (z_new - z)))
        primal = float(np.linalg.norm(du))
        z = z_new
        it += 1
        val = fval(beta)
        if val < best_val:
            best_val = val
        trace.append(best_val)
        scale = 1.0 + float(np.linalg.norm(mb))
        if (it % 25 == 0 and primal < 1e-5 * scale) or (primal < 1e-10 * scale and dual < 1e-8 * scale):
            if polish_and_check(z) <= tol:
                converged = True
                break
        if it % 100 == 0:  # residual balancing
            if primal > 10 * dual and rho < 1e8:
                rho *= 2.0
                u /= 2.0
                chol = factor(rho)
            elif dual > 10 * primal and rho > 1e-8:
                rho /= 2.0
                u *= 2.0
                chol = factor(rho)
    if not converged and polish_and_check(z) <= tol:
        converged = True
    return best, it, converged, trace


def _solve_identity(x, y, compiled, beta0, tol, max_iter, order):
    if isinstance(compiled, _Separable):
        return _cd_separable(x, y, compiled, beta0, tol, max_iter, order)
    if isinstance(compiled, _Slope):
        return _fista_slope(x, y, compiled, beta0, tol, max_iter)
    return _admm_matrix_l1(x, y, compiled, beta0, tol, max_iter)


def _solve_sqrt(x, y, compiled, beta0, tol, max_iter, order):
    """Alternating scheme for the square-root link.

    With the residual norm s frozen, the stationarity condition matches the
    identity-link problem with every lam scaled by 2 s; iterate the two until
    the joint certificate on the original objective is met.
    """
    ynorm = float(np.linalg.norm(y))
    beta = beta0.copy()
    total_iter = 0
    trace = []
    best = beta.copy()

    def sqrt_obj(b):
        return float(np.linalg.norm(y - x @ b)) + _compiled_value(compiled, b)

    best_val = sqrt_obj(beta)
    s = float(np.linalg.norm(y - x @ beta))
    if s < RESIDUAL_FLOOR * ynorm:
        raise DegenerateInputError("residual vanished under the square-root link")
    converged = False
    prev_s = None
    for outer in range(200):
        scaled = _scale_compiled(compiled, 2.0 * s)
        # continuation: solve loosely while the residual norm is still moving
        inner_tol = s * (max(tol, 1e-5) if outer < 2 else tol)
        beta, used, _, _ = _solve_identity(
            x, y, scaled, beta, inner_tol, max(1, max_iter - total_iter), order
        )
        total_iter += used
        r = y - x @ beta
        s_new = float(np.linalg.norm(r))
        if s_new < RESIDUAL_FLOOR * ynorm:
            raise DegenerateInputError("residual vanished under the square-root link")
        val = sqrt_obj(beta)
        if val < best_val:
            best_val = val
            best = beta.copy()
        trace.append(best_val)
        # joint certificate: identity-link residual at the fresh scale, mapped back
        v = -(x.T @ r) / s_new
        if isinstance(compiled, _Separable):
            res = _separable_kkt(v, beta, compiled)
        elif isinstance(compiled, _MatrixL1):
            res = _matrix_l1_kkt(v, beta, compiled)
        else:
            res = _slope_kkt(x, v, beta, compiled, 0.5 / s_new)
        if res <= tol:
            converged = True
            best, best_val = beta, val
            break
        if prev_s is not None and abs(s_new - prev_s) < 1e-3 * abs(s_new - s):
            s_new = 0.5 * (s_new + s)  # damp residual-norm oscillation
        prev_s = s
        s = s_new
        if total_iter >= max_iter:
            break
    return best, total_iter, converged, trace


def solve(
    spec: EstimatorSpec,
    problem: Problem,
    cfg: SolverConfig | None = None,
    warm_start: np.ndarray | None = None,
) -> Solution:
    """Minimize the estimator objective on the problem data.

    Runs ``cfg.restarts`` independent passes (permuted coordinate orders,
    perturbed starts) and returns the best iterate found. ``converged`` is
    true only if the KKT residual certificate meets ``cfg.tol``; on failure
    the best iterate is still returned, flagged unconverged. ``warm_start``
    seeds the first pass.
    """
    cfg = cfg or SolverConfig()
    if spec.penalty.p != problem.p:
        raise InvalidInputError("penalty dimension does not match the design")
    if spec.requires_identity_design:
        if problem.n != problem.p or not np.array_equal(problem.x, np.eye(problem.p)):
            raise InvalidInputError(f"{spec.name} is defined against an identity design")
    compiled = _compile_penalty(spec.penalty)
    rng = np.random.default_rng(cfg.seed)
    x, y = problem.x, problem.y
    best = None
    for restart in range(max(1, cfg.restarts)):
        order = rng.permutation(problem.p)
        beta0 = np.zeros(problem.p)
        if restart == 0 and warm_start is not None:
            beta0 = np.asarray(warm_start, dtype=float).copy()
            if beta0.shape != (problem.p,):
                raise InvalidInputError("warm start length does not match the design")
        elif restart > 0 and not isinstance(compiled, _Separable):
            beta0 = 1e-3 * rng.standard_normal(problem.p)
        if spec.link.kind == IDENTITY:
            beta, iters, conv, trace = _solve_identity(
                x, y, compiled, beta0, cfg.tol, cfg.max_iter, order
            )
        else:
            beta, iters, conv, trace = _solve_sqrt(
                x, y, compiled, beta0, cfg.tol, cfg.max_iter, order
            )
        val = objective(spec, problem, beta)
        if best is None or val < best[1]:
            best = (beta, val, iters, conv, trace)
    beta, val, iters, conv, trace = best
    res = kkt_residual(spec, problem, beta)
    return Solution(
        beta=beta,
        fitted=x @ beta,
        objective=val,
        kkt_residual=res,
        iterations=iters,
        converged=bool(conv and res <= cfg.tol),
        objective_trace=trace,
    )
