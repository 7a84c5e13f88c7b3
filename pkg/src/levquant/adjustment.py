"""Target-leverage models and partial-adjustment speed estimation.

Leverage closes a fraction delta of the gap to its target each year:

    LEV_t - LEV_{t-1} = delta * (LEV*_t - LEV_{t-1}) + e_t

with the target linear in firm determinants and macro conditions.
Substituting gives the one-step estimating equation: a quantile regression
of LEV_t on the determinants, the macro variables, and LEV_{t-1} with firm
fixed effects, where the lag coefficient is 1 - delta.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .effects import fit_quantile_fixed_effects
from .errors import ConfigError, DataValidationError, DesignError
from .panel import MACRO_VARIABLES, Regime, RegimeRule, design_from_panel
from .quantreg import DesignMatrix, QuantileFit, fit_quantile

DEFAULT_THETAS = (0.15, 0.35, 0.5, 0.75, 0.95)
DEFAULT_DETERMINANTS = (
    "liqta", "mbratio", "ndts", "profta", "sizeat", "growthat", "invta",
)

_LEVERAGE_VAR = {"book": "levb", "market": "levm"}


@dataclass(frozen=True)
class TargetModelSpec:
    """What to estimate: which leverage, which regressors, which quantiles."""

    leverage: str = "book"
    determinants: tuple = DEFAULT_DETERMINANTS
    macro_vars: tuple = MACRO_VARIABLES
    thetas: tuple = DEFAULT_THETAS
    regime_split: RegimeRule | None = None
    fe_mode: str = "dummy"
    penalty: float = 1.0
    two_step: bool = False
    min_rows_per_coef: int = 10

    def __post_init__(self):
        if self.leverage not in _LEVERAGE_VAR:
            raise ConfigError(f"leverage must be 'book' or 'market', got "
                              f"{self.leverage!r}")
        if not self.determinants:
            raise ConfigError("determinants must be non-empty")
        for th in self.thetas:
            if not (0.0 < th < 1.0):
                raise ConfigError(f"quantile {th} outside (0, 1)")


@dataclass
class AdjustmentResult:
    theta: float
    leverage: str
    lag_coefficient: float
    speed: float
    pseudo_r2: float
    n_used: int
    regime: Regime | None = None
    out_of_range: bool = False
    fit: QuantileFit = field(default=None, repr=False)


def lag_leverage(panel, kind="book"):
    """Attach each row's previous-year leverage of the given kind.

    The lag exists only when the same firm has the immediately preceding
    fiscal year with that leverage present; firm-first years and post-gap
    years carry no lag and drop out of adjustment designs.
    """
    if kind not in _LEVERAGE_VAR:
        raise ConfigError(f"leverage must be 'book' or 'market', got {kind!r}")
    panel._need_rows()
    var = _LEVERAGE_VAR[kind]
    lag_field = var + "_lag"
    out = []
    prev = None
    for row in panel.rows:
        lag = None
        if (
            prev is not None
            and prev.firm_id == row.firm_id
            and prev.fiscal_year == row.fiscal_year - 1
        ):
            lag = getattr(prev, var)
        out.append(replace(row, **{lag_field: lag}))
        prev = row
    return panel.with_rows(out)


def _fit_speed(panel, spec, theta, fit_options):
    var = _LEVERAGE_VAR[spec.leverage]
    lag_name = var + "_lag"
    predictors = tuple(spec.determinants) + tuple(spec.macro_vars) + (lag_name,)
    design, firms, _ = design_from_panel(panel, var, predictors)
    kw = dict(fit_options or {})
    if spec.two_step:
        lam, fit, n_used = _two_step(design, firms, spec, theta, kw)
    else:
        fit = fit_quantile_fixed_effects(
            design, firms, theta, mode=spec.fe_mode, penalty=spec.penalty, **kw
        )
        lam = fit.coefficients[lag_name]
        n_used = design.n
    return AdjustmentResult(
        theta=theta,
        leverage=spec.leverage,
        lag_coefficient=lam,
        speed=1.0 - lam,
        pseudo_r2=fit.pseudo_r2,
        n_used=n_used,
        out_of_range=not (0.0 <= lam <= 1.0),
        fit=fit,
    )


def _two_step(design, firms, spec, theta, kw):
    # step 1: the target model without the lag; step 2: regress the leverage
    # change on the fitted gap, slope = delta
    lag_name = _LEVERAGE_VAR[spec.leverage] + "_lag"
    j_lag = design.names.index(lag_name)
    keep = [j for j in range(design.k) if j != j_lag]
    target_design = DesignMatrix(
        names=[design.names[j] for j in keep], X=design.X[:, keep], y=design.y
    )
    step1 = fit_quantile_fixed_effects(
        target_design, firms, theta, mode=spec.fe_mode, penalty=spec.penalty, **kw
    )
    beta = np.asarray([step1.coefficients[m] for m in target_design.names])
    effects = np.asarray([step1.group_effects[str(f)] for f in firms])
    target = target_design.X @ beta + effects
    lev_lag = design.X[:, j_lag]
    gap = target - lev_lag
    dy = design.y - lev_lag
    step2 = fit_quantile(
        DesignMatrix(names=("gap",), X=gap[:, None], y=dy), theta, **kw
    )
    delta = step2.coefficients["gap"]
    return 1.0 - delta, step2, design.n


def estimate_speed(panel, spec, *, fit_options=None):
    """Per-quantile adjustment speeds for one leverage kind.

    The panel is lagged internally if needed.  ``speed = 1 - lag
    coefficient`` holds exactly by construction; a lag coefficient outside
    [0, 1] is reported with ``out_of_range`` set rather than clipped.
    """
    var = _LEVERAGE_VAR[spec.leverage]
    if all(getattr(r, var + "_lag") is None for r in panel.rows or ()):
        panel = lag_leverage(panel, spec.leverage)
    return [_fit_speed(panel, spec, th, fit_options) for th in spec.thetas]


@dataclass
class RegimeSplit:
    by_year: dict
    counts: dict

    def years_in(self, regime):
        return tuple(y for y, r in self.by_year.items() if r is regime)


def split_regimes(macro, rule=RegimeRule()):
    """Partition macro years into growth/recession under ``rule``.

    An empty regime triggers a warning (per-regime estimation for it is
    skipped downstream).
    """
    if not isinstance(macro, dict):
        macro = {m.year: m for m in macro}
    by_year = {y: rule.classify(m.gdp_growth) for y, m in sorted(macro.items())}
    counts = {
        Regime.Growth: sum(r is Regime.Growth for r in by_year.values()),
        Regime.Recession: sum(r is Regime.Recession for r in by_year.values()),
    }
    for regime, count in counts.items():
        if count == 0:
            warnings.warn(f"regime {regime.value} contains no years", stacklevel=2)
    return RegimeSplit(by_year=by_year, counts=counts)


@dataclass
class RegimeSpeeds:
    results: dict   # Regime -> list of AdjustmentResult
    skipped: dict   # Regime -> reason


def estimate_speed_by_regime(panel, spec, *, fit_options=None):
    """Adjustment speeds per macroeconomic regime.

    Rows are assigned by the regime of year t (the adjustment year); the
    lag is taken on the full panel first, so a regime-boundary row keeps
    its previous-year leverage.  Regimes with fewer than
    ``min_rows_per_coef * n_coefficients`` usable rows are skipped with a
    diagnostic.
    """
    if spec.regime_split is None:
        raise ConfigError("spec.regime_split is required for per-regime speeds")
    if panel.macro is None:
        raise DataValidationError("macro series not joined")
    panel = lag_leverage(panel, spec.leverage)
    split = split_regimes(panel.macro, spec.regime_split)
    var = _LEVERAGE_VAR[spec.leverage]
    k = len(spec.determinants) + len(spec.macro_vars) + 1
    needed = spec.min_rows_per_coef * k
    results, skipped = {}, {}
    for regime in (Regime.Growth, Regime.Recession):
        mask = np.asarray(
            [split.by_year[r.fiscal_year] is regime for r in panel.rows]
        )
        usable = sum(
            1
            for r, m in zip(panel.rows, mask)
            if m and getattr(r, var) is not None and getattr(r, var + "_lag") is not None
        )
        if usable < needed:
            skipped[regime] = (
                f"{usable} usable rows < required {needed} ({k} coefficients)"
            )
            warnings.warn(
                f"regime {regime.value} skipped: {skipped[regime]}", stacklevel=2
            )
            continue
        sub = panel.subset(mask)
        try:
            results[regime] = [
                replace(res, regime=regime)
                for res in estimate_speed(sub, spec, fit_options=fit_options)
            ]
        except (DataValidationError, DesignError) as err:
            # e.g. a one-year regime leaves the macro columns constant
            skipped[regime] = f"degenerate subset: {err}"
            warnings.warn(
                f"regime {regime.value} skipped: {skipped[regime]}", stacklevel=2
            )
    return RegimeSpeeds(results=results, skipped=skipped)
