"""Fixed- and random-effects estimators, the Hausman test, and
fixed-effects handling inside quantile fits."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.stats import chi2

from .errors import ConfigError, DataValidationError, DesignError
from .quantreg import (
    INTERCEPT,
    DesignMatrix,
    QuantileFit,
    _check_rank_dense,
    _GroupedOps,
    _solve_pinball,
    _validate_theta,
)


class EffectsKind(enum.Enum):
    FixedWithin = "fixed_within"
    RandomGLS = "random_gls"
    PooledOLS = "pooled_ols"


class ModelChoice(enum.Enum):
    FixedEffects = "fixed_effects"
    RandomEffects = "random_effects"


@dataclass
class EffectsFit:
    """A linear panel fit with its covariance matrix.

    ``group_effects`` (within estimator only) are normalized to average
    exactly zero across groups; ``intercept`` carries the common level, so
    a group's estimated level is ``intercept + group_effects[g]``.
    ``sigma_u`` / ``sigma_e`` hold the *variance* components (sigma^2).
    """

    kind: EffectsKind
    names: tuple
    coefficients: dict
    vcov: np.ndarray = field(repr=False)
    nobs: int
    df_resid: int
    group_effects: dict | None = None
    intercept: float | None = None
    sigma_u: float | None = None
    sigma_e: float | None = None
    sigma_u_clamped: bool = False

    def coef_vector(self, names):
        return np.asarray([self.coefficients[m] for m in names])

    def vcov_for(self, names):
        idx = [self.names.index(m) for m in names]
        return self.vcov[np.ix_(idx, idx)]


@dataclass
class HausmanResult:
    statistic: float
    df: int
    p_value: float
    decision: ModelChoice
    rank_deficient: bool = False


def _group_codes(groups, n):
    groups = np.asarray(groups)
    if groups.shape[0] != n:
        raise DataValidationError("every row needs a group label")
    labels, codes = np.unique(groups, return_inverse=True)
    return labels, codes


def within_transform(matrix, groups):
    """Subtract group means from each column; total function.

    Post: every column has zero mean within every group (singleton groups
    become all-zero rows).
    """
    M = np.asarray(matrix, dtype=float)
    vec = M.ndim == 1
    if vec:
        M = M[:, None]
    _, codes = _group_codes(groups, M.shape[0])
    counts = np.bincount(codes).astype(float)
    means = np.zeros((counts.size, M.shape[1]))
    for j in range(M.shape[1]):
        means[:, j] = np.bincount(codes, weights=M[:, j]) / counts
    out = M - means[codes]
    return out[:, 0] if vec else out


def _group_means(M, codes, n_groups):
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    if M.ndim == 1:
        return np.bincount(codes, weights=M, minlength=n_groups) / counts
    out = np.empty((n_groups, M.shape[1]))
    for j in range(M.shape[1]):
        out[:, j] = np.bincount(codes, weights=M[:, j], minlength=n_groups) / counts
    return out


def fit_fixed_effects(design, groups):
    """Within (fixed-effects) estimator.

    Slopes come from least squares on group-demeaned data; the residual
    variance uses the n - k - G degrees-of-freedom correction.  The design
    must not contain an intercept column (it is absorbed by the effects).
    """
    if INTERCEPT in design.names:
        raise DesignError(
            "fixed-effects design must not include an intercept column; "
            "it is absorbed by the group effects",
            columns=[INTERCEPT],
        )
    labels, codes = _group_codes(groups, design.n)
    G = labels.size
    if np.max(np.bincount(codes)) < 2:
        raise DataValidationError("no within variation: all groups are singletons")
    Xw = within_transform(design.X, groups)
    yw = within_transform(design.y, groups)
    try:
        _check_rank_dense(Xw, design.names)
    except DesignError as err:
        raise DesignError(
            "no within-group variation (time-invariant or collinear after "
            f"demeaning): {', '.join(err.columns)}",
            columns=err.columns,
        ) from None
    n, k = design.n, design.k
    dof = n - k - G
    if dof <= 0:
        raise DataValidationError(
            f"too few observations for {k} slopes and {G} group effects"
        )
    b, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    resid = yw - Xw @ b
    sigma_e2 = float(resid @ resid) / dof
    vcov = sigma_e2 * np.linalg.inv(Xw.T @ Xw)
    gm = _group_means(design.y - design.X @ b, codes, G)
    level = float(np.mean(gm))
    effects = gm - level
    return EffectsFit(
        kind=EffectsKind.FixedWithin,
        names=design.names,
        coefficients=dict(zip(design.names, (float(v) for v in b))),
        vcov=vcov,
        nobs=n,
        df_resid=dof,
        group_effects={str(l): float(e) for l, e in zip(labels, effects)},
        intercept=level,
        sigma_e=sigma_e2,
    )


def fit_pooled_ols(design):
    """Ordinary least squares ignoring the panel structure."""
    _check_rank_dense(design.X, design.names)
    n, k = design.n, design.k
    b, *_ = np.linalg.lstsq(design.X, design.y, rcond=None)
    resid = design.y - design.X @ b
    dof = n - k
    sigma2 = float(resid @ resid) / dof
    return EffectsFit(
        kind=EffectsKind.PooledOLS,
        names=design.names,
        coefficients=dict(zip(design.names, (float(v) for v in b))),
        vcov=sigma2 * np.linalg.inv(design.X.T @ design.X),
        nobs=n,
        df_resid=dof,
        sigma_e=sigma2,
    )


def fit_random_effects(design, groups):
    """Feasible GLS by quasi-demeaning with Swamy-Arora variance components.

    lambda_g = 1 - sqrt(sigma_e^2 / (T_g sigma_u^2 + sigma_e^2)).  A negative
    sigma_u^2 estimate is clamped to zero (flagged), making the fit collapse
    to pooled OLS exactly.  The design must include an intercept column.
    """
    if INTERCEPT not in design.names:
        raise ConfigError("random-effects design must include an intercept column")
    labels, codes = _group_codes(groups, design.n)
    G = labels.size
    n, k = design.n, design.k
    sizes = np.bincount(codes).astype(float)

    slope_idx = [j for j, m in enumerate(design.names) if m != INTERCEPT]
    slope_names = tuple(design.names[j] for j in slope_idx)
    fe = fit_fixed_effects(
        DesignMatrix(names=slope_names, X=design.X[:, slope_idx], y=design.y),
        groups,
    )
    sigma_e2 = fe.sigma_e

    if G <= k:
        raise DataValidationError(
            f"variance components not estimable: {G} groups for {k} coefficients"
        )
    Xb = _group_means(design.X, codes, G)
    yb = _group_means(design.y, codes, G)
    bb, *_ = np.linalg.lstsq(Xb, yb, rcond=None)
    rb = yb - Xb @ bb
    sigma1 = float(rb @ rb) / (G - k)
    sigma_u2 = sigma1 - sigma_e2 * float(np.mean(1.0 / sizes))
    clamped = sigma_u2 < 0.0
    if clamped:
        sigma_u2 = 0.0

    lam = 1.0 - np.sqrt(sigma_e2 / (sizes * sigma_u2 + sigma_e2))
    Xt = design.X - lam[codes, None] * _group_means(design.X, codes, G)[codes]
    yt = design.y - lam[codes] * _group_means(design.y, codes, G)[codes]
    b, *_ = np.linalg.lstsq(Xt, yt, rcond=None)
    resid = yt - Xt @ b
    dof = n - k
    s2 = float(resid @ resid) / dof
    return EffectsFit(
        kind=EffectsKind.RandomGLS,
        names=design.names,
        coefficients=dict(zip(design.names, (float(v) for v in b))),
        vcov=s2 * np.linalg.inv(Xt.T @ Xt),
        nobs=n,
        df_resid=dof,
        sigma_u=sigma_u2,
        sigma_e=sigma_e2,
        sigma_u_clamped=clamped,
    )


def hausman_decision(statistic, df, significance=0.05):
    """Chi-squared tail probability and model choice for a Hausman statistic."""
    p = float(chi2.sf(statistic, df))
    choice = ModelChoice.FixedEffects if p < significance else ModelChoice.RandomEffects
    return p, choice


def hausman_test(fe, re, significance=0.05):
    """Hausman specification test comparing FE and RE slope estimates.

    H = d' [V_FE - V_RE]^+ d over the slope coefficients both fits share
    (intercept excluded).  A variance difference that is not positive
    definite is projected onto its positive-semidefinite part and inverted
    by pseudo-inverse, with df reduced to the retained rank and
    ``rank_deficient`` set; the test never crashes on that pathology.
    """
    common = [m for m in fe.names if m in re.names and m != INTERCEPT]
    if not common:
        raise DataValidationError("fits share no slope coefficients to compare")
    d = fe.coef_vector(common) - re.coef_vector(common)
    k = len(common)
    if not d.any():
        p, choice = hausman_decision(0.0, k, significance)
        return HausmanResult(0.0, k, p, choice, False)
    dv = fe.vcov_for(common) - re.vcov_for(common)
    dv = 0.5 * (dv + dv.T)
    eigval, eigvec = scipy.linalg.eigh(dv)
    tol = 1e-10 * max(np.max(np.abs(eigval)), 1e-300)
    pos = eigval > tol
    rank = int(np.sum(pos))
    deficient = rank < k
    if rank == 0:
        # variance difference has no positive part: no usable contrast
        return HausmanResult(0.0, 0, 1.0, ModelChoice.RandomEffects, True)
    proj = eigvec[:, pos].T @ d
    stat = float(np.sum(proj**2 / eigval[pos]))
    df = rank if deficient else k
    p, choice = hausman_decision(stat, df, significance)
    return HausmanResult(stat, df, p, choice, deficient)


def fit_quantile_fixed_effects(
    design,
    groups,
    theta,
    *,
    mode="dummy",
    penalty=1.0,
    group_cap=5000,
    tol=1e-9,
    max_iter=500,
    fallback=True,
):
    """Quantile regression with firm fixed effects.

    ``dummy`` mode augments the design with one indicator column per group
    and fits slopes and effects jointly (the indicator block is handled
    with specialized linear algebra, so large group counts stay cheap).
    ``penalized`` mode shrinks the effects with an L1 penalty
    ``penalty * sum |a_i|`` instead, following the longitudinal-data
    treatment: the penalty rows enter the same LP with symmetric weights.

    An intercept column is rejected: the group effects absorb it.
    """
    theta = _validate_theta(theta)
    if INTERCEPT in design.names:
        raise DesignError(
            "remove the intercept column: group effects absorb the level",
            columns=[INTERCEPT],
        )
    labels, codes = _group_codes(groups, design.n)
    G = labels.size
    n, kx = design.n, design.k
    if mode == "dummy" and G > group_cap:
        raise DataValidationError(
            f"{G} groups exceed the dummy-mode cap ({group_cap}); "
            "use mode='penalized'"
        )
    if mode not in ("dummy", "penalized"):
        raise ConfigError(f"unknown fixed-effects mode {mode!r}")
    Xw = within_transform(design.X, groups)
    try:
        _check_rank_dense(Xw, design.names)
    except DesignError as err:
        raise DesignError(
            "no within-group variation for column(s): " + ", ".join(err.columns),
            columns=err.columns,
        ) from None
    if n < kx + G and mode == "dummy":
        raise DataValidationError(
            f"need at least {kx + G} rows for {kx} slopes and {G} effects"
        )

    if mode == "dummy":
        ops = _GroupedOps(design.X, codes, G)
        y = design.y
        p = np.full(n, theta)
        q = np.full(n, 1.0 - theta)
        data_rows = None
    else:
        if penalty <= 0.0:
            raise ConfigError("penalty must be positive in penalized mode")
        X_ext = np.vstack([design.X, np.zeros((G, kx))])
        codes_ext = np.concatenate([codes, np.arange(G)])
        ops = _GroupedOps(X_ext, codes_ext, G)
        y = np.concatenate([design.y, np.zeros(G)])
        p = np.concatenate([np.full(n, theta), np.full(G, penalty)])
        q = np.concatenate([np.full(n, 1.0 - theta), np.full(G, penalty)])
        data_rows = n

    (beta, r, objective, pr2, counts), meta = _solve_pinball(
        ops, y, theta, p, q, tol, max_iter, fallback, data_rows=data_rows
    )
    meta["mode"] = mode
    if mode == "penalized":
        meta["penalty"] = penalty
    return QuantileFit(
        theta=theta,
        coefficients=dict(zip(design.names, (float(v) for v in beta[:kx]))),
        objective=objective,
        pseudo_r2=pr2,
        n_neg=counts[0],
        n_pos=counts[1],
        n_zero=counts[2],
        solver_meta=meta,
        group_effects={str(l): float(v) for l, v in zip(labels, beta[kx:])},
        residuals=r,
    )
