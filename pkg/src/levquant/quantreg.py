"""Conditional-quantile linear models fit by check-loss minimization.

The production solver is a Frisch-Newton interior point method on the
bounded-variable dual LP (Mehrotra predictor-corrector), with an
iteratively reweighted least squares fallback on a smoothed objective.
``fit_quantile_oracle`` provides a provably exact small-instance reference
via brute-force basis enumeration; it is meant for tests and verification
and refuses large instances.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.stats import norm

from .errors import (
    ConvergenceError,
    DegenerateResampleError,
    DesignError,
    OracleCapError,
)

INTERCEPT = "intercept"


def _validate_theta(theta):
    if not (0.0 < float(theta) < 1.0):
        raise ValueError(f"theta must lie strictly in (0, 1), got {theta}")
    return float(theta)


@dataclass(frozen=True)
class DesignMatrix:
    """Named regression design: response ``y`` and predictor columns ``X``.

    Invariants enforced at construction: n >= k, unique column names,
    finite values, and no zero-variance column other than one named
    ``"intercept"``.
    """

    names: tuple
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float).ravel())
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", tuple(self.names))
        if X.ndim != 2:
            raise DesignError("X must be a 2-d array")
        n, k = X.shape
        if len(self.names) != k:
            raise DesignError(f"{len(self.names)} names for {k} columns")
        if len(set(self.names)) != k:
            raise DesignError("column names must be unique")
        if y.shape[0] != n:
            raise DesignError("response length does not match design rows")
        if n < k:
            raise DesignError(f"need n >= k, got n={n}, k={k}")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise DesignError("design contains non-finite values")
        flat = [
            name
            for j, name in enumerate(self.names)
            if name != INTERCEPT and np.ptp(X[:, j]) == 0.0
        ]
        if flat:
            raise DesignError(
                f"zero-variance column(s): {', '.join(flat)}", columns=flat
            )

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def k(self):
        return self.X.shape[1]


@dataclass
class QuantileFit:
    """Result of one quantile fit.

    ``coefficients`` holds the named slope vector (group effects, when a
    fixed-effects fit produced them, live in ``group_effects``).
    ``objective`` is the check loss of the fit's own residuals evaluated on
    the data rows.
    """

    theta: float
    coefficients: dict
    objective: float
    pseudo_r2: float
    n_neg: int
    n_pos: int
    n_zero: int
    solver_meta: dict
    std_errors: dict | None = None
    group_effects: dict | None = None
    residuals: np.ndarray = field(default=None, repr=False)

    @property
    def n(self):
        return self.n_neg + self.n_pos + self.n_zero

    @property
    def subgradient_ok(self):
        """Koenker-Bassett sign-count optimality: n_neg <= n*theta and
        n_pos <= n*(1-theta)."""
        n = self.n
        return (
            self.n_neg <= n * self.theta + 1e-9
            and self.n_pos <= n * (1.0 - self.theta) + 1e-9
        )


def check_loss(residuals, theta):
    """Asymmetric absolute loss: theta * r for r >= 0, (1-theta) * |r| for r < 0."""
    theta = _validate_theta(theta)
    r = np.asarray(residuals, dtype=float)
    return float(np.sum(np.where(r >= 0.0, theta * r, (theta - 1.0) * r)))


def _weighted_pinball(r, p, q):
    # per-row generalization: p_i * r+ + q_i * r-
    return float(np.sum(np.where(r >= 0.0, p * r, -q * r)))


# ---------------------------------------------------------------------------
# design operators: dense and grouped (dense block + disjoint indicator block)
# ---------------------------------------------------------------------------


class _DenseOps:
    """A = X^T for a plain dense design."""

    def __init__(self, X):
        self.X = X
        self.ncols = X.shape[1]

    def matvec(self, nu):  # X @ nu, length n
        return self.X @ nu

    def rmatvec(self, v):  # X^T @ v, length k
        return self.X.T @ v

    def solve_normal(self, d, rhs):  # solve (X^T diag(d) X) out = rhs
        M = (self.X * d[:, None]).T @ self.X
        return _chol_solve(M, rhs)

    def row_matrix(self, idx):
        return self.X[idx]

    def polish_rows(self, r):
        return np.argsort(np.abs(r), kind="stable")[: self.ncols]


class _GroupedOps:
    """Design [X | G] where G is a one-indicator-per-row group block.

    Exploits the diagonal structure of the indicator block so Newton steps
    cost O(n * kx^2) instead of O(n * (kx + n_groups)^2).
    """

    def __init__(self, X, codes, n_groups):
        self.X = X
        self.codes = codes
        self.n_groups = n_groups
        self.kx = X.shape[1]
        self.ncols = self.kx + n_groups

    def matvec(self, nu):
        return self.X @ nu[: self.kx] + nu[self.kx :][self.codes]

    def rmatvec(self, v):
        head = self.X.T @ v
        tail = np.bincount(self.codes, weights=v, minlength=self.n_groups)
        return np.concatenate([head, tail])

    def solve_normal(self, d, rhs):
        X, codes, G, kx = self.X, self.codes, self.n_groups, self.kx
        dX = X * d[:, None]
        Mxx = dX.T @ X
        Mgg = np.bincount(codes, weights=d, minlength=G)
        Mxg = np.empty((kx, G))
        for j in range(kx):
            Mxg[j] = np.bincount(codes, weights=dX[:, j], minlength=G)
        fx, fg = rhs[:kx], rhs[kx:]
        ratio = Mxg / Mgg[None, :]
        S = Mxx - ratio @ Mxg.T
        out_x = _chol_solve(S, fx - ratio @ fg)
        out_g = (fg - Mxg.T @ out_x) / Mgg
        return np.concatenate([out_x, out_g])

    def row_matrix(self, idx):
        m = len(idx)
        rows = np.zeros((m, self.ncols))
        rows[:, : self.kx] = self.X[idx]
        rows[np.arange(m), self.kx + self.codes[idx]] = 1.0
        return rows

    def polish_rows(self, r):
        # a basic solution needs one interpolated row per group plus kx
        # more; pick each group's smallest residual, then the global rest
        absr = np.abs(r)
        order = np.lexsort((absr, self.codes))
        first = np.ones(len(order), dtype=bool)
        first[1:] = self.codes[order][1:] != self.codes[order][:-1]
        per_group = order[first]
        taken = np.zeros(r.size, dtype=bool)
        taken[per_group] = True
        by_resid = np.argsort(absr, kind="stable")
        rest = by_resid[~taken[by_resid]][: self.kx]
        return np.concatenate([per_group, rest])


def _chol_solve(M, rhs):
    jitter = 0.0
    scale = float(np.trace(M)) / max(M.shape[0], 1) or 1.0
    for _ in range(4):
        try:
            cf = scipy.linalg.cho_factor(
                M + jitter * np.eye(M.shape[0]), check_finite=False
            )
            return scipy.linalg.cho_solve(cf, rhs, check_finite=False)
        except scipy.linalg.LinAlgError:
            jitter = max(jitter * 100.0, 1e-12 * scale)
    raise scipy.linalg.LinAlgError("normal-equation matrix is singular")


def _check_rank_dense(X, names):
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag.max(initial=0.0) * max(X.shape) * np.finfo(float).eps
    rank = int(np.sum(diag > tol))
    if rank < X.shape[1]:
        bad = [names[j] for j in piv[rank:]]
        raise DesignError(
            f"design is rank deficient; collinear column(s): {', '.join(bad)}",
            columns=bad,
        )


# ---------------------------------------------------------------------------
# Frisch-Newton interior point
# ---------------------------------------------------------------------------


def _interior_point(ops, y, p, q, tol, max_iter):
    """Mehrotra predictor-corrector on the dual box LP.

    Solves min sum_i p_i*(r_i)+ + q_i*(r_i)- over coefficients, via its dual
    max y'a  s.t.  A'a = A'q, 0 <= a <= p + q  (A = design).  Returns the
    multiplier ``nu`` on the equality constraints; the primal coefficient
    vector is ``-nu``.
    """
    n = y.size
    c = -y
    ub = p + q
    b = ops.rmatvec(q)
    a = q.astype(float).copy()
    s = p.astype(float).copy()
    nu = ops.solve_normal(np.ones(n), ops.rmatvec(c))
    rho = c - ops.matvec(nu)
    delta = 0.1 * float(np.mean(np.abs(rho))) + 1e-10
    z = np.maximum(rho, 0.0) + delta
    w = z - rho  # keeps the dual residual exactly zero at the start

    gap = float(a @ z + s @ w)
    for it in range(max_iter):
        obj = float(c @ a)
        if gap < tol * (1.0 + abs(obj)):
            return nu, it, gap, True
        r_p = b - ops.rmatvec(a)
        r_d = c - ops.matvec(nu) - z + w
        za = z / a
        ws = w / s
        d = 1.0 / (za + ws)

        # affine (predictor) direction
        rhs2 = r_d + z - w
        dnu = ops.solve_normal(d, r_p + ops.rmatvec(d * rhs2))
        da = d * (ops.matvec(dnu) - rhs2)
        ds = -da
        dz = -z - za * da
        dw = -w - ws * ds
        ap = min(_steplen(a, da), _steplen(s, ds))
        ad = min(_steplen(z, dz), _steplen(w, dw))
        mu = gap / (2.0 * n)
        mu_aff = (
            (a + ap * da) @ (z + ad * dz) + (s + ap * ds) @ (w + ad * dw)
        ) / (2.0 * n)
        sigma = min(max((mu_aff / mu) ** 3, 1e-10), 0.99999)

        # corrector
        tgt = sigma * mu
        g_z = tgt / a - z - (da * dz) / a
        g_w = tgt / s - w - (ds * dw) / s
        rhs2 = r_d - g_z + g_w
        dnu = ops.solve_normal(d, r_p + ops.rmatvec(d * rhs2))
        da = d * (ops.matvec(dnu) - rhs2)
        ds = -da
        dz = g_z - za * da
        dw = g_w - ws * ds
        ap = min(_steplen(a, da), _steplen(s, ds))
        ad = min(_steplen(z, dz), _steplen(w, dw))

        a += ap * da
        s += ap * ds
        nu += ad * dnu
        z += ad * dz
        w += ad * dw
        gap = float(a @ z + s @ w)
    return nu, max_iter, gap, False


def _steplen(v, dv):
    neg = dv < 0.0
    if not neg.any():
        return 1.0
    return min(1.0, 0.9995 * float(np.min(-v[neg] / dv[neg])))


def _polish_vertex(ops, y, beta, p, q):
    """Snap an interior solution to the best nearby basic (vertex) solution.

    Quantile-regression optima occur at coefficient vectors interpolating k
    observations; refitting through the k smallest residuals sharpens the
    interior iterate to an exact vertex.  Kept only when it does not worsen
    the objective.
    """
    k = ops.ncols
    r = y - ops.matvec(beta)
    loss = _weighted_pinball(r, p, q)
    idx = ops.polish_rows(r)
    if idx.size != k:
        return beta, r, loss, False
    rows = ops.row_matrix(idx)
    try:
        with warnings.catch_warnings():
            # singular candidates are fine: they are rejected on objective
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            cand = scipy.linalg.solve(rows, y[idx])
    except (scipy.linalg.LinAlgError, ValueError):
        return beta, r, loss, False
    if not np.isfinite(cand).all():
        return beta, r, loss, False
    r_cand = y - ops.matvec(cand)
    loss_cand = _weighted_pinball(r_cand, p, q)
    if loss_cand <= loss + 1e-9 * (1.0 + loss):
        return cand, r_cand, loss_cand, True
    return beta, r, loss, False


def _irls(ops, y, p, q, iters=400):
    """Smoothed-objective iteratively reweighted least squares fallback."""
    scale = max(1.0, float(np.max(np.abs(y))))
    eps = 1e-3 * scale
    beta = ops.solve_normal(np.ones(y.size), ops.rmatvec(y))
    for i in range(iters):
        r = y - ops.matvec(beta)
        wgt = np.where(r >= 0.0, p, q) / np.maximum(np.abs(r), eps)
        beta = ops.solve_normal(wgt, ops.rmatvec(wgt * y))
        if (i + 1) % 25 == 0:
            eps = max(eps * 0.1, 1e-12 * scale)
    return beta


def _classify_residuals(r, y):
    ztol = 1e-8 * max(1.0, float(np.max(np.abs(y))) if y.size else 1.0)
    zero = np.abs(r) <= ztol
    n_neg = int(np.sum(r < -ztol))
    n_pos = int(np.sum(r > ztol))
    return n_neg, n_pos, int(np.sum(zero))


def _coordinate_optimality(ops, y, r, p, q):
    """Subgradient check: both one-sided directional derivatives of the
    weighted pinball loss must be nonnegative along every coordinate."""
    ztol = 1e-8 * max(1.0, float(np.max(np.abs(y))) if y.size else 1.0)
    zero = np.abs(r) <= ztol
    w = np.where(r > 0, -p, q)
    w[zero] = 0.0
    base = ops.rmatvec(w)
    idx = np.flatnonzero(zero)
    Z = ops.row_matrix(idx)
    pos = np.clip(Z, 0.0, None)
    neg = pos - Z
    up_fwd = q[idx] @ pos + p[idx] @ neg    # slack along +e_j
    up_bwd = q[idx] @ neg + p[idx] @ pos    # slack along -e_j
    scale = ops.rmatvec(np.maximum(p, q) * (1.0 + np.abs(y)))
    tol = 1e-6 * (np.abs(scale) + 1.0)
    return bool(
        np.all(base + up_fwd >= -tol) and np.all(-base + up_bwd >= -tol)
    )


def _unconditional_objective(y, theta):
    # intercept-only minimizer is any sample theta-quantile; the objective
    # value is identical across the minimizing set
    qv = float(np.quantile(y, theta, method="inverted_cdf"))
    return check_loss(y - qv, theta)


def _finish_fit(ops, y, beta, theta, p, q, meta, data_rows=None):
    beta, r, _, polished = _polish_vertex(ops, y, beta, p, q)
    meta["polished"] = polished
    if data_rows is None:
        r_data, y_data = r, y
    else:
        r_data, y_data = r[:data_rows], y[:data_rows]
    objective = check_loss(r_data, theta)
    obj0 = _unconditional_objective(y_data, theta)
    if obj0 <= 0.0:
        pr2 = 0.0
    else:
        pr2 = 1.0 - objective / obj0
        if -1e-9 < pr2 < 0.0:
            pr2 = 0.0
        if 1.0 < pr2 < 1.0 + 1e-9:
            pr2 = 1.0
    n_neg, n_pos, n_zero = _classify_residuals(r_data, y_data)
    return beta, r_data, objective, pr2, (n_neg, n_pos, n_zero)


def _solve_pinball(ops, y, theta, p, q, tol, max_iter, fallback, data_rows=None):
    meta = {"algorithm": "frisch-newton"}
    try:
        nu, iterations, gap, converged = _interior_point(ops, y, p, q, tol, max_iter)
    except scipy.linalg.LinAlgError:
        nu, iterations, gap, converged = None, 0, math.inf, False
    if converged:
        meta.update(iterations=iterations, converged=True, duality_gap=gap)
        out = _finish_fit(ops, y, -nu, theta, p, q, meta, data_rows)
        return out, meta
    if fallback:
        beta = _irls(ops, y, p, q)
        meta = {
            "algorithm": "irls",
            "iterations": iterations,
            "converged": True,
            "duality_gap": gap,
        }
        out = _finish_fit(ops, y, beta, theta, p, q, meta, data_rows)
        # the fallback has no duality certificate; insist on the
        # subgradient conditions before accepting its result
        beta_out = out[0]
        if not _coordinate_optimality(ops, y, y - ops.matvec(beta_out), p, q):
            raise ConvergenceError(
                "fallback solution failed the subgradient optimality check",
                best_coefficients=dict(enumerate(beta_out)),
                diagnostics={"iterations": iterations, "duality_gap": gap},
            )
        return out, meta
    best = None if nu is None else dict(zip(range(ops.ncols), -nu))
    raise ConvergenceError(
        f"interior point did not converge in {max_iter} iterations "
        f"(duality gap {gap:.3e})",
        best_coefficients=best,
        diagnostics={"iterations": iterations, "duality_gap": gap},
    )


def fit_quantile(design, theta, *, tol=1e-9, max_iter=500, fallback=True):
    """Fit a linear conditional-quantile model by check-loss minimization.

    Parameters
    ----------
    design : DesignMatrix
    theta : float in (0, 1)
    tol : relative duality-gap convergence tolerance.
    max_iter : interior point iteration cap.
    fallback : run the smoothed IRLS fallback if the interior point fails.

    Returns
    -------
    QuantileFit with coefficients named after the design columns.
    """
    theta = _validate_theta(theta)
    _check_rank_dense(design.X, design.names)
    n = design.n
    ops = _DenseOps(design.X)
    p = np.full(n, theta)
    q = np.full(n, 1.0 - theta)
    (beta, r, objective, pr2, counts), meta = _solve_pinball(
        ops, design.y, theta, p, q, tol, max_iter, fallback
    )
    return QuantileFit(
        theta=theta,
        coefficients=dict(zip(design.names, (float(v) for v in beta))),
        objective=objective,
        pseudo_r2=pr2,
        n_neg=counts[0],
        n_pos=counts[1],
        n_zero=counts[2],
        solver_meta=meta,
        residuals=r,
    )


def pseudo_r2(fit, design, theta):
    """Koenker-Machado goodness of fit: 1 - loss(fit) / loss(intercept-only).

    By convention the value is 0 when the intercept-only objective is 0
    (constant response).
    """
    theta = _validate_theta(theta)
    obj0 = _unconditional_objective(design.y, theta)
    if obj0 <= 0.0:
        return 0.0
    value = 1.0 - fit.objective / obj0
    if -1e-9 < value < 0.0:
        return 0.0
    return value


# ---------------------------------------------------------------------------
# exact small-instance oracle
# ---------------------------------------------------------------------------


def fit_quantile_oracle(design, theta, *, cap=200, max_bases=5_000_000):
    """Exact reference solution by brute-force basis enumeration.

    Visits every k-subset of rows as a candidate interpolating basis; an
    optimal quantile-regression vertex interpolates k observations, so the
    minimum over candidates is the global optimum.  Deliberately refuses
    instances above ``cap`` rows.
    """
    theta = _validate_theta(theta)
    n, k = design.n, design.k
    if n > cap:
        raise OracleCapError(f"oracle caps at {cap} rows, got {n}")
    n_bases = math.comb(n, k)
    if n_bases > max_bases:
        raise OracleCapError(
            f"{n_bases} candidate bases exceed the enumeration budget"
        )
    X, y = design.X, design.y
    combos = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.intp,
    ).reshape(-1, k)
    best_obj = math.inf
    best_beta = None
    chunk = 20_000
    for start in range(0, combos.shape[0], chunk):
        sel = combos[start : start + chunk]
        Xs = X[sel]  # (m, k, k)
        ys = y[sel]  # (m, k)
        dets = np.linalg.det(Xs)
        ok = np.abs(dets) > 0.0
        if not ok.any():
            continue
        betas = np.linalg.solve(Xs[ok], ys[ok][..., None])[..., 0]
        finite = np.isfinite(betas).all(axis=1)
        betas = betas[finite]
        if betas.size == 0:
            continue
        resid = y[None, :] - betas @ X.T
        losses = np.sum(
            np.where(resid >= 0.0, theta * resid, (theta - 1.0) * resid), axis=1
        )
        j = int(np.argmin(losses))
        if losses[j] < best_obj:
            best_obj = float(losses[j])
            best_beta = betas[j].copy()
    if best_beta is None:
        raise DesignError("every k-subset of rows is singular; design is degenerate")
    return dict(zip(design.names, (float(v) for v in best_beta))), best_obj


# ---------------------------------------------------------------------------
# pairs bootstrap
# ---------------------------------------------------------------------------


@dataclass
class BootstrapResult:
    std_errors: dict
    replicates: np.ndarray = field(repr=False)
    n_boot: int
    n_redrawn: int
    p_values: dict = field(default=None)


def _normal_p_values(names, means, ses):
    out = {}
    for name, m, se in zip(names, means, ses):
        out[name] = float(2.0 * norm.sf(abs(m) / se)) if se > 0 else 0.0
    return out


def bootstrap_se(
    design,
    theta,
    n_boot=200,
    seed=0,
    cluster=None,
    *,
    refit_group_effects=False,
    tol=1e-9,
    max_iter=500,
):
    """Pairs-bootstrap standard errors for a quantile fit.

    The resampling unit is the cluster when ``cluster`` labels are given
    (all rows of a drawn cluster enter together), otherwise the row.  With
    ``refit_group_effects`` the cluster labels double as fixed-effect
    groups: every drawn cluster copy gets a fresh effect and only the slope
    coefficients (plus the mean effect, under ``"fixed_effects_mean"``) are
    collected.  Replicate seeds derive deterministically from ``seed``, so
    results are bit-identical across runs and parallelism schedules.

    Degenerate (rank-deficient) resamples are redrawn and counted; more
    than 50% degenerate draws is an error.
    """
    theta = _validate_theta(theta)
    if n_boot < 2:
        raise ValueError("need at least 2 bootstrap replications")
    if refit_group_effects and cluster is None:
        raise ValueError("refit_group_effects requires cluster labels")
    n = design.n
    if cluster is not None:
        cluster = np.asarray(cluster)
        if cluster.shape[0] != n:
            raise ValueError("cluster labels must cover all design rows")
        _, codes = np.unique(cluster, return_inverse=True)
        by_cluster = [np.flatnonzero(codes == g) for g in range(codes.max() + 1)]

    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    children = seed.spawn(n_boot)
    names = list(design.names)
    if refit_group_effects:
        names = [m for m in names if m != INTERCEPT] + ["fixed_effects_mean"]
    rows = np.empty((n_boot, len(names)))
    attempts = 0
    degenerate = 0
    for b in range(n_boot):
        rng = np.random.default_rng(children[b])
        for _try in range(50):
            attempts += 1
            if cluster is None:
                idx = rng.integers(0, n, size=n)
                draw_groups = None
            else:
                picks = rng.integers(0, len(by_cluster), size=len(by_cluster))
                idx = np.concatenate([by_cluster[g] for g in picks])
                draw_groups = np.repeat(
                    np.arange(len(picks)), [len(by_cluster[g]) for g in picks]
                )
            try:
                rows[b] = _refit(
                    design, idx, draw_groups, names, theta,
                    refit_group_effects, tol, max_iter,
                )
                break
            except (DesignError, ConvergenceError, scipy.linalg.LinAlgError):
                degenerate += 1
        else:
            raise DegenerateResampleError(
                f"replicate {b}: 50 consecutive degenerate resamples"
            )
    if degenerate > attempts / 2.0:
        raise DegenerateResampleError(
            f"{degenerate} of {attempts} resamples were degenerate"
        )
    ses = np.std(rows, axis=0, ddof=1)
    means = np.mean(rows, axis=0)
    return BootstrapResult(
        std_errors=dict(zip(names, (float(v) for v in ses))),
        replicates=rows,
        n_boot=n_boot,
        n_redrawn=degenerate,
        p_values=_normal_p_values(names, means, ses),
    )


def _refit(design, idx, draw_groups, names, theta, refit_fe, tol, max_iter):
    if refit_fe:
        from .effects import fit_quantile_fixed_effects

        keep = [j for j, m in enumerate(design.names) if m != INTERCEPT]
        sub = DesignMatrix(
            names=[design.names[j] for j in keep],
            X=design.X[idx][:, keep],
            y=design.y[idx],
        )
        fit = fit_quantile_fixed_effects(
            sub, draw_groups, theta, tol=tol, max_iter=max_iter
        )
        vals = [fit.coefficients[m] for m in names[:-1]]
        vals.append(float(np.mean(list(fit.group_effects.values()))))
        return np.asarray(vals)
    sub = DesignMatrix(names=design.names, X=design.X[idx], y=design.y[idx])
    fit = fit_quantile(sub, theta, tol=tol, max_iter=max_iter)
    return np.asarray([fit.coefficients[m] for m in names])
