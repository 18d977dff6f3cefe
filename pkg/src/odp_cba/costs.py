"""CAPEX and OPEX schedules and the split of shared costs across countries.

Incremental CAPEX equips newly added vehicles and RES capacity each year; the
one-time core platform cost is a separate first-year flow. OPEX declines
geometrically from its first-year level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Mapping, Optional, Sequence

from .model import AssumptionModel, CbaError, TimeAxis, YearSeries, money
from .projections import ProjectionSet

__all__ = [
    "ASSETS",
    "CapexItem",
    "CapexPlan",
    "OpexCategory",
    "OpexPlan",
    "CostSchedule",
    "new_units",
    "capex_schedule",
    "calibrate_unit_costs",
    "fit_opex_decay",
    "opex_schedule",
    "opex_breakdown",
    "allocate_costs_by_country",
    "allocate_exact",
    "ai_cost_shares",
]

ASSETS = ("ev", "et", "res_mw")
SUBTOTAL_TOL = Decimal("0.05")


@dataclass(frozen=True)
class CapexItem:
    item: str
    pv: Decimal
    ai_related: bool = False


@dataclass(frozen=True)
class CapexPlan:
    """One-time core items plus € unit costs per newly managed asset."""

    one_time_items: tuple
    one_time_subtotal: Decimal
    unit_costs: Mapping[str, float] = field(default_factory=lambda: {a: 0.0 for a in ASSETS})

    def __post_init__(self):
        total = sum((i.pv for i in self.one_time_items), Decimal(0))
        if abs(total - self.one_time_subtotal) > SUBTOTAL_TOL:
            raise CbaError(f"one-time items sum to {total}, stated subtotal {self.one_time_subtotal}")
        missing = set(ASSETS) - set(self.unit_costs)
        if missing:
            raise CbaError(f"missing unit costs for {sorted(missing)}")
        for k, v in self.unit_costs.items():
            if v < 0 or not math.isfinite(v):
                raise CbaError(f"unit cost {k}={v} must be finite and >= 0")

    @property
    def one_time_core(self) -> Decimal:
        return self.one_time_subtotal

    @property
    def ai_one_time(self) -> Decimal:
        return sum((i.pv for i in self.one_time_items if i.ai_related), Decimal(0))


@dataclass(frozen=True)
class OpexCategory:
    name: str
    share: float
    ai_related: bool = False


@dataclass(frozen=True)
class OpexPlan:
    categories: tuple
    base_year_total: Decimal
    annual_decay: float

    def __post_init__(self):
        s = math.fsum(c.share for c in self.categories)
        if abs(s - 1.0) > 1e-9:
            raise CbaError(f"OPEX shares sum to {s!r}")
        if any(c.share < 0 for c in self.categories):
            raise CbaError("OPEX shares must be >= 0")
        if not 0.0 <= self.annual_decay <= 0.2:
            raise CbaError(f"annual_decay {self.annual_decay} not in [0, 0.2]")
        if self.base_year_total < 0:
            raise CbaError("base_year_total must be >= 0")

    @classmethod
    def from_averages(cls, averages: Sequence[tuple], base_year_total, annual_decay: float) -> "OpexPlan":
        """Build shares from per-category annual averages ``(name, value, ai_related)``."""
        total = math.fsum(float(v) for _, v, _ in averages)
        cats = tuple(OpexCategory(n, float(v) / total, bool(ai)) for n, v, ai in averages)
        return cls(cats, money(base_year_total), annual_decay)


@dataclass(frozen=True)
class CostSchedule:
    axis: TimeAxis
    capex: YearSeries
    opex: YearSeries
    one_time: Decimal
    country: str = "ALL"

    def __post_init__(self):
        for name in ("capex", "opex"):
            if any(v < 0 for v in getattr(self, name)):
                raise CbaError(f"negative {name} value")
        if self.one_time < 0:
            raise CbaError("negative one-time cost")

    def one_time_series(self) -> YearSeries:
        vals = [Decimal(0)] * len(self.axis)
        vals[0] = self.one_time
        return YearSeries(self.axis, tuple(vals))

    def total_series(self) -> YearSeries:
        return self.capex + self.opex + self.one_time_series()

    def total(self) -> Decimal:
        return self.capex.total() + self.opex.total() + self.one_time

    def scaled(self, capex: Decimal = Decimal(1), opex: Decimal = Decimal(1), one_time: Optional[Decimal] = None):
        one_time = capex if one_time is None else one_time
        return CostSchedule(
            self.axis, self.capex.scale(capex), self.opex.scale(opex), self.one_time * one_time, self.country
        )


def new_units(proj: ProjectionSet, country: str) -> dict[str, YearSeries]:
    """Newly managed units per year; the first year counts the whole initial stock."""
    out = {}
    for asset, series, unit in (
        ("ev", proj.ev_stock[country], 1000.0),
        ("et", proj.et_stock[country], 1000.0),
        ("res_mw", proj.res_capacity[country], 1000.0),
    ):
        v = [x * unit for x in series.values]
        adds = [v[0]] + [max(b - a, 0.0) for a, b in zip(v, v[1:])]
        out[asset] = YearSeries(proj.axis, tuple(adds))
    return out


def capex_schedule(plan: CapexPlan, proj: ProjectionSet, countries: Optional[Sequence[str]] = None) -> YearSeries:
    """Incremental CAPEX in M€ per year, summed over ``countries`` (default: all)."""
    countries = proj.countries if countries is None else countries
    totals = [0.0] * len(proj.axis)
    for c in countries:
        units = new_units(proj, c)
        for asset in ASSETS:
            uc = plan.unit_costs[asset]
            for k, n in enumerate(units[asset].values):
                totals[k] += n * uc
    return YearSeries(proj.axis, tuple(money(t / 1e6) for t in totals))


def calibrate_unit_costs(
    proj: ProjectionSet, targets: Mapping[str, float], rate: float = 0.04
) -> dict[str, float]:
    """€ unit costs whose discounted ten-year outlays hit the ``targets`` (M€).

    Each asset enters its own target linearly, so the least-squares fit is
    exact and separable: ``target / sum(new_units * df)``.
    """
    axis = proj.axis
    df = [(1.0 + rate) ** -(y - axis.base_year) for y in axis.years]
    out = {}
    for asset in ASSETS:
        weighted = 0.0
        for c in proj.countries:
            weighted += math.fsum(n * d for n, d in zip(new_units(proj, c)[asset].values, df))
        if weighted <= 0:
            raise CbaError(f"no new {asset} units to spread the target over")
        out[asset] = float(targets[asset]) * 1e6 / weighted
    return out


def fit_opex_decay(first: float, last: float, years: int) -> float:
    """Decay ``d`` with ``first * (1 - d) ** years == last``."""
    if first <= 0 or last <= 0 or years <= 0:
        raise CbaError("decay fit needs positive endpoints and span")
    return 1.0 - (last / first) ** (1.0 / years)


def opex_schedule(plan: OpexPlan, axis: TimeAxis) -> YearSeries:
    base = float(plan.base_year_total)
    return YearSeries(
        axis, tuple(money(base * (1.0 - plan.annual_decay) ** k) for k in range(len(axis)))
    )


def allocate_exact(total: Decimal, shares: Sequence) -> list[Decimal]:
    """Split ``total`` by ``shares``; the last part absorbs the remainder."""
    parts = [total * money(s) for s in shares[:-1]]
    parts.append(total - sum(parts, Decimal(0)))
    return parts


def opex_breakdown(plan: OpexPlan, axis: TimeAxis) -> dict[str, YearSeries]:
    """Per-category OPEX; categories sum to the annual total exactly."""
    total = opex_schedule(plan, axis)
    shares = [c.share for c in plan.categories]
    cols = [allocate_exact(v, shares) for v in total.values]
    return {
        c.name: YearSeries(axis, tuple(col[i] for col in cols)) for i, c in enumerate(plan.categories)
    }


def allocate_costs_by_country(
    sched: CostSchedule, shares: "AssumptionModel | Mapping[str, Decimal]"
) -> dict[str, CostSchedule]:
    """Split every year's CAPEX/OPEX and the one-time cost by country share."""
    if isinstance(shares, AssumptionModel):
        shares = shares.cost_shares()
    ids = list(shares)
    if not ids:
        raise CbaError("no countries to allocate to")
    weights = [shares[c] for c in ids]
    capex = [allocate_exact(v, weights) for v in sched.capex.values]
    opex = [allocate_exact(v, weights) for v in sched.opex.values]
    one = allocate_exact(sched.one_time, weights)
    out = {}
    for i, cid in enumerate(ids):
        out[cid] = CostSchedule(
            sched.axis,
            YearSeries(sched.axis, tuple(col[i] for col in capex)),
            YearSeries(sched.axis, tuple(col[i] for col in opex)),
            one[i],
            cid,
        )
    return out


def ai_cost_shares(capex: CapexPlan, opex: OpexPlan) -> dict[str, float]:
    """Share of AI-tagged lines in the one-time core CAPEX and in OPEX."""
    return {
        "capex_one_time": float(capex.ai_one_time / capex.one_time_core) if capex.one_time_core else 0.0,
        "opex": math.fsum(c.share for c in opex.categories if c.ai_related),
    }
