"""Discounting, NPV/BCR/payback, and the deterministic appraisal pass.

Fixture tables are already present values at the reference rate. For them
``DiscountSpec.source_rate`` records that rate, and re-discounting at another
rate multiplies each year by ``((1 + source) / (1 + rate)) ** (t - base)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Mapping, Optional

from .benefits import STREAMS, BenefitParams, StreamTable, benefits_table
from .costs import CostSchedule
from .model import AssumptionModel, CbaError, TimeAxis, YearSeries, money
from .projections import ProjectionSet

__all__ = [
    "RateOutOfRange",
    "ZeroCostDivision",
    "DiscountSpec",
    "discount_divisors",
    "discount_factors",
    "discount_series",
    "CashflowTable",
    "AppraisalResult",
    "bcr_of",
    "appraise",
    "COST_COLUMNS",
    "AppraisalInputs",
    "DeterministicRun",
    "run_deterministic",
]

COST_COLUMNS = ("CAPEX", "OPEX", "ONE_TIME")


class RateOutOfRange(CbaError):
    pass


class ZeroCostDivision(CbaError):
    pass


@dataclass(frozen=True)
class DiscountSpec:
    rate: float = 0.04
    base_year: int = 2025
    convention: str = "end-of-year"

    def __post_init__(self):
        if not -0.5 < self.rate < 0.5:
            raise RateOutOfRange(f"discount rate {self.rate} not in (-0.5, 0.5)")
        if self.convention != "end-of-year":
            raise CbaError(f"unsupported convention {self.convention!r}")


def discount_divisors(axis: TimeAxis, d: DiscountSpec, source_rate: Optional[float] = None) -> tuple:
    """Decimal divisor per axis year (flows are divided, which keeps 104/1.04 exact).

    ``source_rate`` marks the flows as present values at that rate; the
    divisors then convert them to present values at ``d.rate`` (all ones when
    the two rates agree).
    """
    if axis.first_year <= d.base_year:
        raise CbaError("axis must start after the discount base year")
    r = money(d.rate)
    if source_rate is None:
        growth = Decimal(1) + r
    else:
        src = money(source_rate)
        if src == r:
            return (Decimal(1),) * len(axis)
        growth = (Decimal(1) + r) / (Decimal(1) + src)
    return tuple(growth ** (y - d.base_year) for y in axis.years)


def discount_factors(axis: TimeAxis, d: DiscountSpec, source_rate: Optional[float] = None) -> tuple:
    return tuple(Decimal(1) / g for g in discount_divisors(axis, d, source_rate))


def _pv(values, divisors) -> list:
    return [money(v) / g for v, g in zip(values, divisors)]


def discount_series(s: YearSeries, d: DiscountSpec, already_discounted: bool = False) -> Decimal:
    """Present value at ``d.base_year``; plain sum when ``already_discounted``."""
    vals = [money(v) for v in s.values]
    if already_discounted:
        return sum(vals, Decimal(0))
    return sum(_pv(vals, discount_divisors(s.axis, d)), Decimal(0))


def bcr_of(pv_benefits: Decimal, pv_costs: Decimal) -> Decimal:
    if pv_costs == 0:
        raise ZeroCostDivision("present value of costs is zero")
    return pv_benefits / pv_costs


@dataclass(frozen=True)
class AppraisalResult:
    pv_benefits: Decimal
    pv_costs: Decimal
    npv: Decimal
    bcr: Optional[Decimal]
    payback_eoy: Optional[int]
    payback_interp: Optional[float]
    cumulative: tuple = ()
    rate: float = 0.04

    def headline(self) -> dict:
        return {
            "pv_benefits": self.pv_benefits,
            "pv_costs": self.pv_costs,
            "npv": self.npv,
            "bcr": self.bcr,
            "payback_eoy": self.payback_eoy,
            "payback_interp": self.payback_interp,
        }


@dataclass(frozen=True)
class AppraisalInputs:
    """Annual benefit columns per stream plus cost columns, ready to appraise.

    ``source_rate`` is set when the columns are already present values at
    that rate (fixture mode).
    """

    axis: TimeAxis
    benefits: Mapping[str, YearSeries]
    costs: Mapping[str, YearSeries]
    discount: DiscountSpec = field(default_factory=DiscountSpec)
    source_rate: Optional[float] = None
    label: str = "ALL"

    def __post_init__(self):
        if set(self.costs) != set(COST_COLUMNS):
            raise CbaError(f"cost columns must be {COST_COLUMNS}")

    @classmethod
    def from_tables(
        cls,
        table: StreamTable,
        costs: CostSchedule,
        discount: DiscountSpec = DiscountSpec(),
        source_rate: Optional[float] = None,
        label: str = "ALL",
    ) -> "AppraisalInputs":
        return cls(
            table.axis,
            {s: table.series(s) for s in STREAMS},
            {"CAPEX": costs.capex, "OPEX": costs.opex, "ONE_TIME": costs.one_time_series()},
            discount,
            source_rate,
            label,
        )

    @property
    def columns(self) -> tuple:
        return tuple(self.benefits) + COST_COLUMNS

    def column(self, name: str) -> YearSeries:
        return self.benefits[name] if name in self.benefits else self.costs[name]

    def with_rate(self, rate: float) -> "AppraisalInputs":
        return replace(self, discount=replace(self.discount, rate=rate))

    def scaled(self, multipliers: Mapping[str, Decimal]) -> "AppraisalInputs":
        def sc(cols):
            return {k: (v.scale(money(multipliers[k])) if k in multipliers else v) for k, v in cols.items()}

        return replace(self, benefits=sc(self.benefits), costs=sc(self.costs))

    def divisors(self, rate: Optional[float] = None) -> tuple:
        d = self.discount if rate is None else replace(self.discount, rate=rate)
        return discount_divisors(self.axis, d, self.source_rate)

    def column_pv(self, name: str, rate: Optional[float] = None) -> Decimal:
        return sum(_pv(self.column(name).values, self.divisors(rate)), Decimal(0))

    def benefit_series(self) -> YearSeries:
        out = None
        for s in self.benefits.values():
            out = s if out is None else out + s
        return out

    def cost_series(self) -> YearSeries:
        return self.costs["CAPEX"] + self.costs["OPEX"] + self.costs["ONE_TIME"]


@dataclass(frozen=True)
class CashflowTable:
    """Annual benefits, costs and net flow (all M€, as stored)."""

    axis: TimeAxis
    benefits: YearSeries
    capex: YearSeries
    opex: YearSeries
    one_time: YearSeries

    @property
    def costs(self) -> YearSeries:
        return self.capex + self.opex + self.one_time

    @property
    def net(self) -> YearSeries:
        return self.benefits - self.capex - self.opex - self.one_time

    @classmethod
    def from_inputs(cls, x: AppraisalInputs) -> "CashflowTable":
        return cls(x.axis, x.benefit_series(), x.costs["CAPEX"], x.costs["OPEX"], x.costs["ONE_TIME"])


def _payback(axis: TimeAxis, discounted_net: list) -> tuple:
    cum, acc = [], Decimal(0)
    for v in discounted_net:
        acc += v
        cum.append(acc)
    eoy = interp = None
    prev = Decimal(0)
    for k, c in enumerate(cum):
        if c >= 0:
            year = axis.years[k]
            eoy = year
            step = c - prev
            frac = float(-prev / step) if prev < 0 and step > 0 else 0.0
            interp = (year - 1) + frac
            break
        prev = c
    return eoy, interp, tuple(cum)


def appraise(x: AppraisalInputs, d: Optional[DiscountSpec] = None) -> AppraisalResult:
    """NPV, BCR and both payback conventions.

    ``payback_interp`` places the crossing linearly between the ends of the
    two bracketing years, with year ``t`` standing for the end of ``t``.
    """
    if d is not None:
        x = replace(x, discount=d)
    g = x.divisors()
    ben = _pv(x.benefit_series().values, g)
    cost = _pv(x.cost_series().values, g)
    pv_b = sum(ben, Decimal(0))
    pv_c = sum(cost, Decimal(0))
    try:
        bcr = bcr_of(pv_b, pv_c)
    except ZeroCostDivision:
        bcr = None
    eoy, interp, cum = _payback(x.axis, [b - c for b, c in zip(ben, cost)])
    return AppraisalResult(pv_b, pv_c, pv_b - pv_c, bcr, eoy, interp, cum, x.discount.rate)


@dataclass(frozen=True)
class DeterministicRun:
    result: AppraisalResult
    inputs: AppraisalInputs
    benefits: StreamTable
    costs: CostSchedule
    cashflow: CashflowTable
    audit: dict


def run_deterministic(
    model: AssumptionModel,
    proj: ProjectionSet,
    params: BenefitParams,
    costs: CostSchedule,
    d: DiscountSpec = DiscountSpec(),
    drivers=None,
    ledger: bool = True,
    aec_mode: str = "parametric",
    **benefit_kw,
) -> DeterministicRun:
    """Formula-path pass: monetise streams, aggregate, discount, NPV/BCR.

    The audit dict keeps the base-year stream values, ledgers and undiscounted
    annual aggregates.
    """
    table, audit = benefits_table(model, proj, params, drivers, ledger, aec_mode, **benefit_kw)
    x = AppraisalInputs.from_tables(table, costs, d)
    cf = CashflowTable.from_inputs(x)
    result = appraise(x)
    audit = {
        "countries": audit,
        "annual_benefits": cf.benefits.values,
        "annual_costs": cf.costs.values,
        "annual_net": cf.net.values,
    }
    return DeterministicRun(result, x, table, costs, cf, audit)
