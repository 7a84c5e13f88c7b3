"""Synthetic unbalanced firm-year panels from a known partial-adjustment
process, for known-answer validation of every estimator.

The generator simulates raw statement items, so the emitted panel round-trips
through the normal ingestion/derivation path: determinants are whatever
``derive_variables`` recovers from the simulated statements, targets are
built from those exact values, and leverage evolves by the adjustment rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .adjustment import TargetModelSpec, estimate_speed, estimate_speed_by_regime
from .errors import ConfigError
from .panel import (
    FirmYearRecord,
    MacroYear,
    Regime,
    RegimeRule,
    derive_variables,
    ingest_panel,
)

_BURN_IN = 10

DEFAULT_BETA = {"profta": -0.50, "liqta": -0.03, "sizeat": 0.02}
DEFAULT_GAMMA = {"inflation": 0.002, "gdp_rate": -0.0015}


@dataclass(frozen=True)
class ErrorSpec:
    """Adjustment-shock distribution.

    ``heteroskedastic`` scales the normal shock by (1 + het_coef * z) where
    z is the firm's standardized profitability that year, so true
    coefficients differ across quantiles.
    """

    kind: str = "normal"
    sigma: float = 0.006
    df: float = 5.0
    het_coef: float = 0.5

    def __post_init__(self):
        if self.kind not in ("normal", "student", "heteroskedastic"):
            raise ConfigError(f"unknown error kind {self.kind!r}")
        if self.sigma < 0.0:
            raise ConfigError("sigma must be nonnegative")


@dataclass(frozen=True)
class SynthConfig:
    n_firms: int = 100
    t_max: int = 15
    attrition: float = 0.0
    delta: float | tuple = 0.6            # scalar, or (growth, recession)
    beta: dict = field(default_factory=lambda: dict(DEFAULT_BETA))
    gamma: dict = field(default_factory=lambda: dict(DEFAULT_GAMMA))
    intercept: float = 0.30
    firm_effect_sd: float = 0.04
    error: ErrorSpec = ErrorSpec()
    macro_path: tuple | None = None        # ((inflation, gdp_growth), ...) per year
    regime_rule: RegimeRule = RegimeRule()
    tax_rate: float = 0.21
    start_year: int = 2000
    seed: int = 0

    def __post_init__(self):
        deltas = self.delta if isinstance(self.delta, tuple) else (self.delta,)
        for d in deltas:
            # 0 (no adjustment at all) is degenerate but valid for testing
            if not (0.0 <= d <= 1.0):
                raise ConfigError(f"delta must lie in [0, 1], got {d}")
        if self.n_firms < 1:
            raise ConfigError("need at least one firm")
        if self.t_max < 3:
            raise ConfigError("need t_max >= 3 to form lags")
        if not (0.0 <= self.attrition < 1.0):
            raise ConfigError("attrition must lie in [0, 1)")
        drivable = {"profta", "liqta", "sizeat", "growthat", "invta", "ndts"}
        bad = set(self.beta) - drivable
        if bad:
            raise ConfigError(
                f"beta names not drivable by the generator: {sorted(bad)}"
            )
        bad = set(self.gamma) - {"inflation", "gdp_rate"}
        if bad:
            raise ConfigError(f"unknown macro names in gamma: {sorted(bad)}")

    def delta_for(self, regime):
        if isinstance(self.delta, tuple):
            return self.delta[0] if regime is Regime.Growth else self.delta[1]
        return self.delta


@dataclass(frozen=True)
class GroundTruth:
    config: SynthConfig
    firm_effects: dict          # firm_id -> a_i
    regimes: dict               # year -> Regime
    macro: dict                 # year -> MacroYear


def _macro_series(config, rng):
    total = _BURN_IN + config.t_max
    first = config.start_year - _BURN_IN
    if config.macro_path is not None:
        path = list(config.macro_path)
        if len(path) < config.t_max:
            raise ConfigError(
                f"macro_path covers {len(path)} years, need {config.t_max}"
            )
        # recycle the first entry through the burn-in window
        path = [path[0]] * _BURN_IN + path[: config.t_max]
    else:
        infl, gdp = 3.0, 2.0
        path = []
        for _ in range(total):
            infl = 3.0 + 0.5 * (infl - 3.0) + rng.normal(0.0, 1.2)
            gdp = 2.0 + 0.5 * (gdp - 2.0) + rng.normal(0.0, 2.2)
            path.append((infl, gdp))
    out = {}
    for i, (infl, gdp) in enumerate(path):
        year = first + i
        out[year] = MacroYear(
            year=year,
            inflation=float(infl),
            gdp_growth=float(gdp),
            regime=config.regime_rule.classify(gdp),
        )
    return out


def _shock(rng, spec, z):
    if spec.kind == "normal":
        return rng.normal(0.0, spec.sigma)
    if spec.kind == "student":
        return rng.standard_t(spec.df) * spec.sigma
    scale = max(0.05, 1.0 + spec.het_coef * z)
    return rng.normal(0.0, spec.sigma) * scale


def generate_panel(config):
    """Simulate one panel; returns (panel with derived rows, ground truth).

    Identical (config, seed) give byte-identical output.  Leverage starts at
    its stationary level and runs through a discarded burn-in, so the
    emitted years carry no initialization transient.  Attrition removes a
    firm permanently with the configured per-year probability.
    """
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    macro = _macro_series(config, rng)
    years = sorted(macro)
    emit_from = config.start_year

    records = []
    firm_effects = {}
    width = len(str(config.n_firms))
    for i in range(config.n_firms):
        firm = f"F{i + 1:0{width}d}"
        a_i = rng.normal(0.0, config.firm_effect_sd)
        firm_effects[firm] = a_i

        sales = math.exp(rng.normal(4.0, 0.8))
        ppent = math.exp(rng.normal(3.5, 0.6))
        total_assets = math.exp(rng.normal(4.5, 0.5))
        levb = config.intercept + a_i
        levm = config.intercept + a_i
        for year in years:
            # attrition runs over emitted years only, one draw per transition
            if year > emit_from and rng.random() < config.attrition:
                break
            my = macro[year]
            # raw items chosen so ingestion recovers the intended determinants
            profta = rng.normal(0.08, 0.05)
            liqta = math.exp(rng.normal(0.3, 0.35))
            growth = rng.normal(0.04, 0.10)
            sales = max(sales * (1.0 + growth), 1e-6)
            inv = rng.normal(0.1, 0.5)
            dp = 0.08 * ppent
            ppent_prev = ppent
            ppent = max(ppent_prev + inv - dp, 1e-6)
            lct = math.exp(rng.normal(2.0, 0.4))
            act = liqta * lct
            ebit = profta * total_assets
            ip = abs(rng.normal(0.02, 0.01)) * total_assets
            ndts_target = rng.normal(0.5, 1.0)
            txt = config.tax_rate * (ebit - ip - ndts_target)

            x = {
                "profta": profta,
                "liqta": liqta,
                "sizeat": math.log(sales),
                "growthat": growth,
                "invta": ppent - ppent_prev + dp,
                "ndts": ebit - ip - txt / config.tax_rate,
            }
            m = {"inflation": my.inflation, "gdp_rate": my.gdp_growth}
            drive = (
                config.intercept
                + a_i
                + sum(config.beta[name] * x[name] for name in config.beta)
                + sum(config.gamma[name] * m[name] for name in config.gamma)
            )
            delta = config.delta_for(my.regime)
            z = (profta - 0.08) / 0.05
            levb = levb + delta * (drive - levb) + _shock(rng, config.error, z)
            levm = levm + delta * (drive - levm) + _shock(rng, config.error, z)

            if year < emit_from:
                continue
            debt = levb * total_assets
            if 0.0 < levm < 1.0 and debt > 0.0:
                mkt_eq = debt * (1.0 - levm) / levm
            else:
                mkt_eq = None  # market leverage not representable that year
            records.append(
                FirmYearRecord(
                    firm_id=firm,
                    fiscal_year=year,
                    total_assets=total_assets,
                    book_debt=debt,
                    market_equity=mkt_eq,
                    current_assets=act,
                    current_liabilities=lct,
                    ebit=ebit,
                    interest_payable=ip,
                    income_tax=txt,
                    sales=sales,
                    net_ppe=ppent,
                    depreciation=dp,
                )
            )

    emitted_macro = {y: m for y, m in macro.items() if y >= emit_from}
    panel = ingest_panel(records)
    panel = derive_variables(
        panel, emitted_macro, {y: config.tax_rate for y in emitted_macro}
    )
    truth = GroundTruth(
        config=config,
        firm_effects=firm_effects,
        regimes={y: m.regime for y, m in emitted_macro.items()},
        macro=emitted_macro,
    )
    return panel, truth


# ---------------------------------------------------------------------------
# recovery studies
# ---------------------------------------------------------------------------


@dataclass
class RecoveryCell:
    theta: float
    regime: Regime | None
    true_delta: float
    estimates: np.ndarray = field(repr=False)
    n_failed: int = 0

    @property
    def mean(self):
        return float(np.mean(self.estimates))

    @property
    def bias(self):
        return self.mean - self.true_delta

    @property
    def sd(self):
        if self.estimates.size < 2:
            return None
        return float(np.std(self.estimates, ddof=1))

    @property
    def rmse(self):
        return float(np.sqrt(np.mean((self.estimates - self.true_delta) ** 2)))


@dataclass
class RecoveryReport:
    cells: list
    replications: int
    n_failed: int


def monte_carlo_speed(
    config,
    replications,
    *,
    thetas=(0.5,),
    leverage="book",
    determinants=None,
    fit_options=None,
):
    """Bias / SD / RMSE of the estimated speed across simulated panels.

    Per-replication seeds derive from the master seed, so the report is
    deterministic (and independent of any parallel execution order).
    Estimator failures are recorded, excluded, and counted.
    """
    if replications < 1:
        raise ConfigError("need at least one replication")
    if determinants is None:
        determinants = tuple(config.beta)
    per_regime = isinstance(config.delta, tuple)
    spec = TargetModelSpec(
        leverage=leverage,
        determinants=tuple(determinants),
        thetas=tuple(thetas),
        regime_split=config.regime_rule if per_regime else None,
    )
    children = np.random.SeedSequence(config.seed).spawn(replications)
    keys = []
    if per_regime:
        for regime in (Regime.Growth, Regime.Recession):
            keys += [(th, regime) for th in thetas]
    else:
        keys = [(th, None) for th in thetas]
    draws = {key: [] for key in keys}
    n_failed = 0
    for child in children:
        rep_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        rep_config = replace(config, seed=rep_seed)
        try:
            panel, _ = generate_panel(rep_config)
            if per_regime:
                out = estimate_speed_by_regime(panel, spec, fit_options=fit_options)
                for regime, results in out.results.items():
                    for res in results:
                        draws[(res.theta, regime)].append(res.speed)
            else:
                for res in estimate_speed(panel, spec, fit_options=fit_options):
                    draws[(res.theta, None)].append(res.speed)
        except Exception:
            n_failed += 1
    cells = []
    for (th, regime), values in draws.items():
        true_delta = config.delta_for(regime) if per_regime else config.delta
        cells.append(
            RecoveryCell(
                theta=th,
                regime=regime,
                true_delta=true_delta,
                estimates=np.asarray(values, dtype=float),
                n_failed=replications - len(values),
            )
        )
    return RecoveryReport(cells=cells, replications=replications, n_failed=n_failed)


# ---------------------------------------------------------------------------
# writers (exact round-trip with the ingestion schema)
# ---------------------------------------------------------------------------


def _fmt(value):
    return "" if value is None else repr(float(value))


def write_panel_csv(panel, path):
    lines = ["firm_id,fyear,at,debt,mkt_eq,act,lct,ebit,ip,txt,sale,ppent,dp"]
    for r in panel.records:
        lines.append(
            ",".join(
                [
                    r.firm_id,
                    str(r.fiscal_year),
                    _fmt(r.total_assets),
                    _fmt(r.book_debt),
                    _fmt(r.market_equity),
                    _fmt(r.current_assets),
                    _fmt(r.current_liabilities),
                    _fmt(r.ebit),
                    _fmt(r.interest_payable),
                    _fmt(r.income_tax),
                    _fmt(r.sales),
                    _fmt(r.net_ppe),
                    _fmt(r.depreciation),
                ]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_macro_csv(macro, path):
    lines = ["year,cpi_inflation,gdp_growth"]
    for year in sorted(macro):
        m = macro[year]
        lines.append(f"{year},{_fmt(m.inflation)},{_fmt(m.gdp_growth)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_tax_csv(rates, path):
    lines = ["year,tax_rate"]
    for year in sorted(rates):
        lines.append(f"{year},{_fmt(rates[year])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_ground_truth(truth, path):
    cfg = truth.config
    lines = ["# ground truth for the generated panel"]
    lines.append(f"n_firms = {cfg.n_firms}")
    lines.append(f"t_max = {cfg.t_max}")
    lines.append(f"attrition = {cfg.attrition!r}")
    lines.append(f"delta = {cfg.delta!r}")
    lines.append(f"intercept = {cfg.intercept!r}")
    lines.append(f"firm_effect_sd = {cfg.firm_effect_sd!r}")
    lines.append(f"error = {cfg.error.kind} sigma={cfg.error.sigma!r}")
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"beta = {sorted(cfg.beta.items())!r}")
    lines.append(f"gamma = {sorted(cfg.gamma.items())!r}")
    lines.append("[regimes]")
    for year, regime in sorted(truth.regimes.items()):
        lines.append(f"{year} = {regime.value}")
    lines.append("[firm_effects]")
    for firm, a_i in sorted(truth.firm_effects.items()):
        lines.append(f"{firm} = {a_i!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
