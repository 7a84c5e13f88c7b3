"""Firm-year panel ingestion, variable construction, and descriptives.

Input schema (comma-separated, header row), one row per firm-year:

    firm_id, fyear, at, debt, mkt_eq, act, lct, ebit, ip, txt, sale, ppent, dp

``mkt_eq`` may be empty (market equity unknown).  Macro series schema:
``year, cpi_inflation, gdp_growth``; tax-rate table schema:
``year, tax_rate``.  Derived ratios follow the standard panel definitions:
book leverage debt/at, market leverage debt/(debt + market equity),
profitability ebit/at, size ln(sales), liquidity act/lct, growth the annual
rate of change of sales, non-debt tax shields ebit - ip - txt/tax_rate, and
investment ppent_t - ppent_{t-1} + dp_t.
"""
from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .errors import ConfigError, DataValidationError
from .quantreg import INTERCEPT, DesignMatrix

PANEL_COLUMNS = (
    "firm_id", "fyear", "at", "debt", "mkt_eq", "act", "lct",
    "ebit", "ip", "txt", "sale", "ppent", "dp",
)
MACRO_COLUMNS = ("year", "cpi_inflation", "gdp_growth")
TAX_COLUMNS = ("year", "tax_rate")

# canonical derived-variable order (matching the descriptive tables)
VARIABLES = (
    "levb", "levm", "ndts", "growthat", "invta",
    "profta", "sizeat", "liqta", "mbratio",
)
MACRO_VARIABLES = ("inflation", "gdp_rate")


class Regime(enum.Enum):
    Growth = "growth"
    Recession = "recession"


@dataclass(frozen=True)
class RegimeRule:
    """Year is a recession iff gdp growth falls below (or above, when
    ``recession_below`` is off) the threshold."""

    threshold: float = 0.0
    recession_below: bool = True

    def classify(self, gdp_growth):
        below = gdp_growth < self.threshold
        if below if self.recession_below else not below:
            return Regime.Recession
        return Regime.Growth


@dataclass(frozen=True)
class FirmYearRecord:
    firm_id: str
    fiscal_year: int
    total_assets: float
    book_debt: float
    market_equity: float | None
    current_assets: float
    current_liabilities: float
    ebit: float
    interest_payable: float
    income_tax: float
    sales: float
    net_ppe: float
    depreciation: float

    @property
    def usable(self):
        return self.total_assets > 0.0


@dataclass(frozen=True)
class MacroYear:
    year: int
    inflation: float
    gdp_growth: float
    regime: Regime


@dataclass(frozen=True)
class ObservationRow:
    firm_id: str
    fiscal_year: int
    levb: float
    levm: float | None
    ndts: float
    profta: float
    sizeat: float | None
    growthat: float | None
    invta: float | None
    liqta: float | None
    mbratio: float | None
    levb_lag: float | None = None
    levm_lag: float | None = None


@dataclass
class ValidationReport:
    n_read: int = 0
    n_accepted: int = 0
    rejected: list = field(default_factory=list)  # (key, reason)
    flagged: list = field(default_factory=list)   # (key, reason)

    @property
    def n_rejected(self):
        return len(self.rejected)

    @property
    def n_flagged(self):
        return len(self.flagged)


class Panel:
    """Sorted, indexed firm-year panel; immutable after construction.

    ``records`` always holds the accepted raw statements; ``rows`` holds
    the derived observation rows once ``derive_variables`` has run, and
    ``macro`` the joined macro series.
    """

    def __init__(self, records, rows=None, macro=None, validation=None):
        recs = sorted(records, key=lambda r: (r.firm_id, r.fiscal_year))
        self.records = tuple(recs)
        self.rows = None if rows is None else tuple(rows)
        self.macro = None if macro is None else dict(macro)
        self.validation = validation or ValidationReport(
            n_read=len(self.records), n_accepted=len(self.records)
        )
        self._record_index = self._build_index(self.records)
        self._row_index = None if self.rows is None else self._build_index(self.rows)

    @staticmethod
    def _build_index(items):
        index = {}
        start = 0
        for i, item in enumerate(items):
            if i and items[i - 1].firm_id != item.firm_id:
                index[items[i - 1].firm_id] = (start, i)
                start = i
        if items:
            index[items[-1].firm_id] = (start, len(items))
        return index

    def __len__(self):
        return len(self.rows) if self.rows is not None else len(self.records)

    @property
    def firms(self):
        idx = self._row_index if self.rows is not None else self._record_index
        return tuple(idx)

    @property
    def n_firms(self):
        return len(self.firms)

    @property
    def year_span(self):
        items = self.rows if self.rows is not None else self.records
        if not items:
            return None
        years = [r.fiscal_year for r in items]
        return (min(years), max(years))

    def records_for(self, firm_id):
        lo, hi = self._record_index.get(firm_id, (0, 0))
        return self.records[lo:hi]

    def rows_for(self, firm_id):
        self._need_rows()
        lo, hi = self._row_index.get(firm_id, (0, 0))
        return self.rows[lo:hi]

    def _need_rows(self):
        if self.rows is None:
            raise DataValidationError(
                "variables not derived yet: run derive_variables first"
            )

    def variable(self, name):
        """Column of a derived (or macro, resolved by year) variable as a
        float array with NaN for absent values."""
        self._need_rows()
        if name in MACRO_VARIABLES or name in ("inflation", "gdp_growth"):
            if self.macro is None:
                raise DataValidationError("macro series not joined")
            attr = "inflation" if name == "inflation" else "gdp_growth"
            vals = [getattr(self.macro[r.fiscal_year], attr) for r in self.rows]
            return np.asarray(vals, dtype=float)
        out = np.empty(len(self.rows))
        for i, row in enumerate(self.rows):
            try:
                v = getattr(row, name)
            except AttributeError:
                raise KeyError(
                    f"unknown variable {name!r}; available: "
                    f"{', '.join(VARIABLES)}, levb_lag, levm_lag, "
                    f"{', '.join(MACRO_VARIABLES)}"
                ) from None
            out[i] = math.nan if v is None else v
        return out

    def with_rows(self, rows, macro=None):
        return Panel(
            self.records,
            rows=rows,
            macro=self.macro if macro is None else macro,
            validation=self.validation,
        )

    def subset(self, keep_mask):
        """New panel restricted to the derived rows where ``keep_mask`` is
        true (records of the surviving firm-years are kept alongside)."""
        self._need_rows()
        keep_mask = np.asarray(keep_mask, dtype=bool)
        rows = [r for r, k in zip(self.rows, keep_mask) if k]
        keys = {(r.firm_id, r.fiscal_year) for r in rows}
        recs = [r for r in self.records if (r.firm_id, r.fiscal_year) in keys]
        return Panel(recs, rows=rows, macro=self.macro, validation=self.validation)


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------


def ingest_panel(records):
    """Sort, deduplicate, and flag a stream of firm-year records.

    Duplicate (firm, year) keys are rejected (first occurrence wins);
    records with non-positive total assets stay in the panel but are
    flagged unusable and excluded from derived variables.
    """
    accepted = {}
    report = ValidationReport()
    for rec in records:
        report.n_read += 1
        key = (rec.firm_id, rec.fiscal_year)
        if key in accepted:
            report.rejected.append((key, "duplicate (firm_id, fiscal_year)"))
            continue
        accepted[key] = rec
        if not rec.usable:
            report.flagged.append((key, "total_assets <= 0: unusable"))
    report.n_accepted = len(accepted)
    return Panel(accepted.values(), validation=report)


def _parse_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("non-finite")
    return value


def read_panel_csv(path):
    """Read the firm-year CSV into a Panel, collecting row-level rejections."""
    parse_rejects = []
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in PANEL_COLUMNS if c not in header]
        if missing:
            raise DataValidationError(
                f"{path}: missing column(s): {', '.join(missing)}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                mkt = row["mkt_eq"].strip()
                records.append(
                    FirmYearRecord(
                        firm_id=row["firm_id"].strip(),
                        fiscal_year=int(row["fyear"]),
                        total_assets=_parse_float(row["at"]),
                        book_debt=_parse_float(row["debt"]),
                        market_equity=_parse_float(mkt) if mkt else None,
                        current_assets=_parse_float(row["act"]),
                        current_liabilities=_parse_float(row["lct"]),
                        ebit=_parse_float(row["ebit"]),
                        interest_payable=_parse_float(row["ip"]),
                        income_tax=_parse_float(row["txt"]),
                        sales=_parse_float(row["sale"]),
                        net_ppe=_parse_float(row["ppent"]),
                        depreciation=_parse_float(row["dp"]),
                    )
                )
            except (ValueError, TypeError) as err:
                parse_rejects.append((f"line {lineno}", f"malformed value: {err}"))
    if not records and not parse_rejects:
        raise DataValidationError(f"{path}: no data rows")
    panel = ingest_panel(records)
    panel.validation.n_read += len(parse_rejects)
    panel.validation.rejected = parse_rejects + panel.validation.rejected
    return panel


def read_macro_csv(path, rule=RegimeRule()):
    """Read the macro series; regimes are derived from ``rule``."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in MACRO_COLUMNS if c not in header]
        if missing:
            raise DataValidationError(
                f"{path}: missing column(s): {', '.join(missing)}"
            )
        for row in reader:
            year = int(row["year"])
            if year in out:
                raise DataValidationError(f"{path}: duplicate year {year}")
            gdp = _parse_float(row["gdp_growth"])
            out[year] = MacroYear(
                year=year,
                inflation=_parse_float(row["cpi_inflation"]),
                gdp_growth=gdp,
                regime=rule.classify(gdp),
            )
    if not out:
        raise DataValidationError(f"{path}: no data rows")
    return dict(sorted(out.items()))


def read_tax_csv(path):
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in TAX_COLUMNS if c not in header]
        if missing:
            raise DataValidationError(
                f"{path}: missing column(s): {', '.join(missing)}"
            )
        for row in reader:
            out[int(row["year"])] = _parse_float(row["tax_rate"])
    if not out:
        raise DataValidationError(f"{path}: no data rows")
    return out


# ---------------------------------------------------------------------------
# variable derivation
# ---------------------------------------------------------------------------


def _derive_row(rec, prev, tax_rate):
    if tax_rate <= 0.0:
        raise ConfigError(f"tax rate must be positive, got {tax_rate}")
    ta = rec.total_assets
    levb = rec.book_debt / ta
    levm = mbratio = None
    if rec.market_equity is not None:
        denom = rec.book_debt + rec.market_equity
        if denom != 0.0:
            levm = rec.book_debt / denom
        mbratio = denom / ta
    ndts = rec.ebit - rec.interest_payable - rec.income_tax / tax_rate
    profta = rec.ebit / ta
    sizeat = math.log(rec.sales) if rec.sales > 0.0 else None
    liqta = (
        rec.current_assets / rec.current_liabilities
        if rec.current_liabilities != 0.0
        else None
    )
    growthat = invta = None
    if prev is not None:
        # prev is the same firm's immediately preceding fiscal year
        if prev.sales > 0.0:
            growthat = rec.sales / prev.sales - 1.0
        invta = rec.net_ppe - prev.net_ppe + rec.depreciation
    return ObservationRow(
        firm_id=rec.firm_id,
        fiscal_year=rec.fiscal_year,
        levb=levb,
        levm=levm,
        ndts=ndts,
        profta=profta,
        sizeat=sizeat,
        growthat=growthat,
        invta=invta,
        liqta=liqta,
        mbratio=mbratio,
    )


def _winsorize_rows(rows, limits):
    lo_q, hi_q = limits
    if not (0.0 <= lo_q < hi_q <= 1.0):
        raise ConfigError(f"bad winsorization limits {limits}")
    columns = {}
    for name in VARIABLES:
        vals = [getattr(r, name) for r in rows if getattr(r, name) is not None]
        if len(vals) >= 2:
            columns[name] = (
                float(np.quantile(vals, lo_q)),
                float(np.quantile(vals, hi_q)),
            )
    out = []
    for r in rows:
        updates = {}
        for name, (lo, hi) in columns.items():
            v = getattr(r, name)
            if v is not None:
                updates[name] = min(max(v, lo), hi)
        out.append(replace(r, **updates))
    return out


def derive_variables(panel, macro, tax_rate_by_year, winsorize=None):
    """Attach all derivable regression variables to a panel's usable rows.

    ``macro`` is a year -> MacroYear mapping (or MacroYear iterable) that
    must cover every usable year.  ``tax_rate_by_year`` is a year -> rate
    mapping, or a single constant rate (accepted with a warning, since
    statutory rates move over long samples).  Lag-dependent variables
    (growth, investment) require the immediately preceding fiscal year for
    the same firm; a gap breaks the chain.  Idempotent: re-running on its
    own output reproduces it.
    """
    if not isinstance(macro, dict):
        macro = {m.year: m for m in macro}
    if isinstance(tax_rate_by_year, (int, float)):
        warnings.warn(
            "using one constant tax rate for all years; supply a per-year "
            "table for long samples",
            stacklevel=2,
        )
        constant = float(tax_rate_by_year)
        tax_rate_by_year = None
    else:
        constant = None

    rows = []
    for firm in panel._record_index:
        recs = panel.records_for(firm)
        by_year = {r.fiscal_year: r for r in recs}
        for rec in recs:
            if not rec.usable:
                continue
            year = rec.fiscal_year
            if year not in macro:
                raise DataValidationError(f"no macro data for year {year}")
            if constant is not None:
                rate = constant
            else:
                try:
                    rate = tax_rate_by_year[year]
                except KeyError:
                    raise ConfigError(f"no tax rate for year {year}") from None
            rows.append(_derive_row(rec, by_year.get(year - 1), rate))
    rows.sort(key=lambda r: (r.firm_id, r.fiscal_year))
    if winsorize is not None:
        rows = _winsorize_rows(rows, winsorize)
    return panel.with_rows(rows, macro=macro)


# ---------------------------------------------------------------------------
# descriptives
# ---------------------------------------------------------------------------


@dataclass
class YearlyMeans:
    years: tuple       # fiscal years with at least one usable row
    variables: tuple
    values: np.ndarray  # (len(years) + 1, len(variables)); last row = All

    def row_labels(self):
        return tuple(str(y) for y in self.years) + ("All",)


def yearly_means(panel, variables=VARIABLES):
    """Per-year variable means plus an over-all-rows grand mean row.

    Means run over rows where the variable is present; a cell with no
    observations is NaN (rendered with an explicit marker downstream).
    """
    panel._need_rows()
    years = sorted({r.fiscal_year for r in panel.rows})
    cols = {v: panel.variable(v) for v in variables}
    row_years = np.asarray([r.fiscal_year for r in panel.rows])
    values = np.full((len(years) + 1, len(variables)), np.nan)
    for i, year in enumerate(years):
        in_year = row_years == year
        for j, v in enumerate(variables):
            vals = cols[v][in_year]
            vals = vals[~np.isnan(vals)]
            if vals.size:
                values[i, j] = vals.mean()
    for j, v in enumerate(variables):
        vals = cols[v][~np.isnan(cols[v])]
        if vals.size:
            values[-1, j] = vals.mean()
    return YearlyMeans(tuple(years), tuple(variables), values)


@dataclass
class CorrelationMatrix:
    names: tuple
    r: np.ndarray
    p: np.ndarray
    n: np.ndarray

    @property
    def k(self):
        return len(self.names)


def correlation_matrix(panel, variables=None, min_pairs=3):
    """Pairwise-complete Pearson correlations with two-sided p-values.

    p comes from t = r * sqrt((n-2)/(1-r^2)) on n-2 degrees of freedom.
    Cells with fewer than ``min_pairs`` complete pairs or zero variance are
    undefined (NaN).  The diagonal is exactly (r=1, p=0).
    """
    if variables is None:
        variables = ("levm", "levb", "ndts", "growthat", "invta", "profta",
                     "sizeat", "liqta", "mbratio") + MACRO_VARIABLES
    cols = [panel.variable(v) for v in variables]
    k = len(variables)
    r = np.full((k, k), np.nan)
    p = np.full((k, k), np.nan)
    n = np.zeros((k, k), dtype=int)
    for i in range(k):
        xi = cols[i]
        present = ~np.isnan(xi)
        n[i, i] = int(present.sum())
        if n[i, i] >= min_pairs and np.ptp(xi[present]) > 0.0:
            r[i, i] = 1.0
            p[i, i] = 0.0
        for j in range(i + 1, k):
            xj = cols[j]
            both = present & ~np.isnan(xj)
            m = int(both.sum())
            n[i, j] = n[j, i] = m
            if m < min_pairs:
                continue
            a, b = xi[both], xj[both]
            if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
                continue
            sa = a - a.mean()
            sb = b - b.mean()
            va = float(sa @ sa)
            vb = float(sb @ sb)
            if va == 0.0 or vb == 0.0:
                continue
            rij = float(sa @ sb) / math.sqrt(va * vb)
            rij = min(1.0, max(-1.0, rij))
            r[i, j] = r[j, i] = rij
            if abs(rij) >= 1.0:
                pij = 0.0
            else:
                t = rij * math.sqrt((m - 2) / (1.0 - rij * rij))
                pij = 2.0 * float(stats.t.sf(abs(t), m - 2))
            p[i, j] = p[j, i] = pij
    return CorrelationMatrix(tuple(variables), r, p, n)


# ---------------------------------------------------------------------------
# regression design construction
# ---------------------------------------------------------------------------


def design_from_panel(panel, response, predictors, *, intercept=False):
    """Listwise-complete design for a panel regression.

    Returns the DesignMatrix, the firm label per row, and the fiscal year
    per row.  Rows missing the response or any predictor are dropped.
    """
    panel._need_rows()
    yv = panel.variable(response)
    cols = [panel.variable(v) for v in predictors]
    keep = ~np.isnan(yv)
    for c in cols:
        keep &= ~np.isnan(c)
    if not keep.any():
        raise DataValidationError(
            f"no complete rows for {response} ~ {' + '.join(predictors)}"
        )
    X = np.column_stack([c[keep] for c in cols])
    names = tuple(predictors)
    if intercept:
        X = np.column_stack([np.ones(X.shape[0]), X])
        names = (INTERCEPT,) + names
    firms = np.asarray([r.firm_id for r in panel.rows])[keep]
    years = np.asarray([r.fiscal_year for r in panel.rows])[keep]
    design = DesignMatrix(names=names, X=X, y=yv[keep])
    return design, firms, years
