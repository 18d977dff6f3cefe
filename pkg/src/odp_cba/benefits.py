"""Monetisation of the eight benefit streams and the flexibility ledger.

Every stream calculator returns millions of euros per year for one country
at base-year quantities. :func:`benefits_table` scales those base values by
growth drivers and assembles a :class:`StreamTable`.

Units inside the calculators: vehicle counts are plain vehicles (not
thousands), capacities in MW, energies in MWh, prices in €/MWh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from decimal import Decimal, Inexact, localcontext
from typing import Iterable, Mapping, Optional, Sequence, Union

from .model import (
    AssumptionModel,
    CbaError,
    TimeAxis,
    YearSeries,
    interpolate_scc,
    money,
)
from .projections import DriverIndex, ProjectionSet, build_driver

__all__ = [
    "STREAMS",
    "LEDGER_CHANNELS",
    "ODP_EFFECT_FIELDS",
    "MixedResolution",
    "ModeInputMissing",
    "MissingPollutantFactor",
    "EnergyNotConserved",
    "BenefitParams",
    "HourlySeries",
    "KpiDelta",
    "RoetasHourly",
    "FlexLedger",
    "StreamTable",
    "null_effects",
    "rod_annual",
    "roetas_annual",
    "csdr_plr_annual",
    "aec_annual",
    "fes_annual",
    "gsms_annual",
    "co2_annual",
    "rap_annual",
    "allocate_flexibility",
    "diurnal_emission_delta",
    "benefits_table",
    "calibrate_unit_bridge",
    "DEFAULT_DRIVERS",
]

STREAMS = ("ROD", "ROETAS", "CSDR_PLR", "FES", "AEC", "GSMS", "CO2", "RAP")
LEDGER_CHANNELS = ("ReliabilityCongestion", "ResAbsorption", "MarketArbitrage", "ResidualDR")
POLLUTANTS = ("NOx", "SOx", "PM25")

_M = 1e6  # € -> M€


class MixedResolution(CbaError):
    pass


class ModeInputMissing(CbaError):
    pass


class MissingPollutantFactor(CbaError):
    pass


class EnergyNotConserved(CbaError):
    pass


@dataclass(frozen=True)
class BenefitParams:
    """Valuation parameters for all eight streams.

    Published parameter values are the defaults. Fields marked
    *placeholder* are calibration values that put the formula path in the
    same order of magnitude as the reference first-year stream values.
    """

    # ROD
    c_od_base: float = 24.2  # M€/yr
    delta_eff: float = 0.15
    r_odp: float = 0.13
    # ROETAS
    p_avg: float = 25.0  # €/MWh
    f_arb: float = 0.05
    eta_cycle: float = 1.0
    # shared physical inputs
    c_res: float = 0.0  # MW, set per country from projections
    flh_res: float = 1200.0  # h/yr, also the CF of the demand-response and curtailment terms
    p_ev: float = 0.0  # MW aggregate charging capacity
    p_et: float = 0.0
    kw_per_ev: Optional[float] = 0.05  # placeholder; derives p_ev from stock when set
    kw_per_et: Optional[float] = 1.0  # placeholder
    h_yr: float = 8760.0
    # CSDR-PLR
    c_dr: float = 11.8  # €/MWh, placeholder fitted to the 2026 CSDR-PLR fixture value
    r_res: float = 0.02  # placeholder
    r_ev: float = 0.10  # placeholder
    r_et: float = 0.10  # placeholder
    r_peak: float = 0.15
    r_pl: float = 1.0  # €/MWh, placeholder
    # AEC
    res_curt: float = 0.01
    c_curt: float = 50.0  # €/MWh
    loss_factor: float = 0.05  # placeholder
    # FES
    r_fes: float = 0.01
    eta_ev: float = 1.0
    eta_et: float = 1.0
    s_ev: float = 800.0  # €/veh·yr
    s_et: float = 1920.0
    # GSMS
    r_gsms: float = 0.05
    c_fuel: float = 500.0  # €/MWh
    r_gsstab: float = 0.01
    p_market: float = 30.0  # €/MWh
    e_ev_yr: float = 0.8  # MWh/veh·yr, placeholder
    e_et_yr: float = 30.0  # placeholder
    unit_bridge: float = 4.14e-8  # 1/MWh; see calibrate_unit_bridge
    # CO2
    r_co2: float = 0.12
    mef_co2: Optional[float] = None  # tCO2/MWh; None -> country grid intensity
    eta_ev_co2: Optional[float] = None  # MWh/veh; None -> eta_ev
    eta_et_co2: Optional[float] = None
    # RAP
    alpha_ev: Mapping[str, float] = field(default_factory=lambda: {"NOx": 1.0e-5, "SOx": 1.0e-6, "PM25": 1.0e-6})
    alpha_et: Mapping[str, float] = field(default_factory=lambda: {"NOx": 4.0e-4, "SOx": 2.0e-5, "PM25": 2.0e-5})
    d_ev: float = 12000.0  # km/yr
    d_et: float = 60000.0
    r_dec: float = 0.05
    ef_poll: Mapping[str, float] = field(default_factory=lambda: {"NOx": 0.3, "SOx": 0.2, "PM25": 0.02})
    damage_cost: Mapping[str, Mapping[str, float]] = field(
        default_factory=lambda: {"*": {"NOx": 12.0, "SOx": 11.0, "PM25": 40.0}}
    )
    pollutants: tuple = POLLUTANTS
    # flexibility ledger
    flex_budget_mwh: Optional[float] = None

    def __post_init__(self):
        bad = []
        for name in _FRACTIONS:
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                bad.append(f"{name}={v} not in [0, 1]")
        for name in _NONNEG:
            v = getattr(self, name)
            if v is not None and v < 0:
                bad.append(f"{name}={v} < 0")
        if bad:
            raise CbaError("invalid BenefitParams: " + "; ".join(bad))

    def with_(self, **kw) -> "BenefitParams":
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, d: Mapping) -> "BenefitParams":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise CbaError(f"unknown BenefitParams keys {sorted(unknown)}")
        d = dict(d)
        if "pollutants" in d:
            d["pollutants"] = tuple(d["pollutants"])
        return cls(**d)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Mapping):
                v = {k: dict(x) if isinstance(x, Mapping) else x for k, x in v.items()}
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


_FRACTIONS = (
    "delta_eff", "r_odp", "f_arb", "eta_cycle", "r_res", "r_ev", "r_et", "r_peak",
    "res_curt", "loss_factor", "r_fes", "r_gsms", "r_gsstab", "r_co2", "r_dec",
)
_NONNEG = (
    "c_od_base", "p_avg", "c_res", "flh_res", "p_ev", "p_et", "kw_per_ev", "kw_per_et", "h_yr",
    "c_dr", "r_pl", "c_curt", "eta_ev", "eta_et", "s_ev", "s_et", "c_fuel", "p_market",
    "e_ev_yr", "e_et_yr", "unit_bridge", "mef_co2", "eta_ev_co2", "eta_et_co2", "d_ev", "d_et",
    "flex_budget_mwh",
)

# Fractions whose zero means "platform has no effect". ``unit_bridge`` carries
# the attribution of the GSMS downtime-deferral term, and ``alpha_ev`` is the
# avoided EV factor of the RAP vehicle term (that term has no rate of its own).
ODP_EFFECT_FIELDS = (
    "r_odp", "f_arb", "r_res", "r_ev", "r_et", "r_peak", "res_curt", "r_fes",
    "r_gsms", "r_gsstab", "r_co2", "r_dec", "unit_bridge", "alpha_ev",
)


def null_effects(p: BenefitParams) -> BenefitParams:
    """Copy of ``p`` with every platform-effect fraction set to zero."""
    kw = {name: 0.0 for name in ODP_EFFECT_FIELDS}
    kw["alpha_ev"] = {k: 0.0 for k in p.alpha_ev}
    return replace(p, **kw)


@dataclass(frozen=True)
class HourlySeries:
    values: tuple
    unit: str = "MW"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) not in (24, 8760):
            raise MixedResolution(f"hourly series must have 24 or 8760 values, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise CbaError("non-finite hourly value")

    def __len__(self):
        return len(self.values)

    def total(self) -> float:
        return math.fsum(self.values)


@dataclass(frozen=True)
class KpiDelta:
    kpi: str
    baseline: float
    odp: float
    unit: str = "MWh"

    @property
    def delta(self) -> float:
        d = self.odp - self.baseline
        if not math.isfinite(d):
            raise CbaError(f"non-finite KPI delta for {self.kpi}")
        return d


@dataclass(frozen=True)
class RoetasHourly:
    """Hourly arbitrage and ancillary-service flows with and without the platform.

    ``ancillary`` maps a product name (FCR, aFRR, ...) to a 4-tuple of
    hourly € series ``(revenue_odp, cost_odp, revenue_base, cost_base)``.
    """

    q_flex_odp: Sequence[float]
    spread_odp: Sequence[float]
    q_flex_base: Sequence[float]
    spread_base: Sequence[float]
    ancillary: Mapping[str, tuple] = field(default_factory=dict)

    def length(self) -> int:
        lens = {len(self.q_flex_odp), len(self.spread_odp), len(self.q_flex_base), len(self.spread_base)}
        for series in self.ancillary.values():
            lens.update(len(s) for s in series)
        if len(lens) != 1:
            raise MixedResolution(f"hourly inputs disagree in length: {sorted(lens)}")
        return lens.pop()


# --------------------------------------------------------------------------
# stream calculators (M€/yr)


def rod_annual(p: BenefitParams) -> float:
    return p.c_od_base * (1.0 + p.delta_eff) * p.r_odp


def _roetas_hourly_parts(p: BenefitParams, h: RoetasHourly) -> tuple[float, float]:
    h.length()
    arb = math.fsum(
        q1 * s1 * p.eta_cycle - q0 * s0 * p.eta_cycle
        for q1, s1, q0, s0 in zip(h.q_flex_odp, h.spread_odp, h.q_flex_base, h.spread_base)
    )
    anc = 0.0
    for rfs_o, csp_o, rfs_b, csp_b in h.ancillary.values():
        anc += math.fsum(rfs_o) - math.fsum(csp_o) - (math.fsum(rfs_b) - math.fsum(csp_b))
    return arb / _M, anc / _M


def roetas_annual(p: BenefitParams, mode: str = "proxy", hourly: Optional[RoetasHourly] = None) -> float:
    """Trading and ancillary revenue uplift.

    ``proxy`` uses ``f_arb * (E_RES + E_EV+ET) * p_avg``; ``hourly`` sums the
    hour-by-hour difference of arbitrage revenue (``Q * spread * eta_cycle``)
    plus net ancillary revenue per product.
    """
    if mode == "proxy":
        energy = p.c_res * p.flh_res + (p.p_ev + p.p_et) * p.h_yr
        return p.f_arb * energy * p.p_avg / _M
    if mode == "hourly":
        if hourly is None:
            raise ModeInputMissing("hourly ROETAS needs RoetasHourly inputs")
        arb, anc = _roetas_hourly_parts(p, hourly)
        return arb + anc
    raise CbaError(f"unknown ROETAS mode {mode!r}")


def _dr_volume(p: BenefitParams) -> float:
    return p.c_res * p.r_res * p.flh_res + p.p_ev * p.r_ev * p.h_yr + p.p_et * p.r_et * p.h_yr


def _base_energy(p: BenefitParams) -> float:
    return p.c_res * p.flh_res + p.p_ev * p.h_yr + p.p_et * p.h_yr


def csdr_plr_annual(p: BenefitParams) -> float:
    demand_response = p.c_dr * _dr_volume(p)
    peak_load = p.r_pl * p.r_peak * _base_energy(p)
    return (demand_response + peak_load) / _M


def aec_annual(
    p: BenefitParams,
    mode: str = "parametric",
    delta: Optional[KpiDelta] = None,
    wholesale: Optional[float] = None,
) -> float:
    """Avoided curtailment, either parametric or from a RES-generation KPI delta."""
    if mode == "parametric":
        return p.res_curt * p.c_res * p.flh_res * p.c_curt / _M
    if mode == "kpi_delta":
        if delta is None or wholesale is None:
            raise ModeInputMissing("kpi_delta AEC needs a RES generation KpiDelta and a wholesale price")
        return delta.delta * wholesale * (1.0 - p.loss_factor) / _M
    raise CbaError(f"unknown AEC mode {mode!r}")


def fes_annual(p: BenefitParams, n_ev: float, n_et: float) -> float:
    if n_ev < 0 or n_et < 0:
        raise CbaError("vehicle counts must be >= 0")
    return p.r_fes * (n_ev * p.eta_ev * p.s_ev + n_et * p.eta_et * p.s_et) / _M


def _fleet_energy(p: BenefitParams, n_ev: float, n_et: float) -> float:
    return n_ev * p.e_ev_yr + n_et * p.e_et_yr


def gsms_annual(p: BenefitParams, n_ev: float, n_et: float, c_res: Optional[float] = None) -> float:
    """Grid stability savings: fuel-timing term, downtime-deferral term, imbalance term."""
    c_res = p.c_res if c_res is None else c_res
    energy = _fleet_energy(p, n_ev, n_et)
    fuel = p.r_gsms * energy * p.c_fuel / _M
    deferral = p.c_od_base * c_res * p.flh_res * p.unit_bridge
    stability = p.r_gsstab * energy * p.p_market / _M
    return fuel + deferral + stability


def _weighted_mean(values: Sequence[float], weights: Optional[Sequence[float]] = None) -> float:
    # shifted by the first value so a constant profile returns that value exactly
    v0 = values[0]
    if weights is None:
        return v0 + math.fsum(v - v0 for v in values) / len(values)
    if len(weights) != len(values):
        raise MixedResolution("weights and values disagree in length")
    wsum = math.fsum(weights)
    return v0 + math.fsum(w * (v - v0) for w, v in zip(weights, values)) / wsum


def co2_annual(
    p: BenefitParams,
    n_ev: float,
    n_et: float,
    scc: float,
    mef: Union[float, HourlySeries],
    c_res: Optional[float] = None,
    profile: Optional[Sequence[float]] = None,
) -> float:
    """CO2 value of platform-attributable energy at the marginal emission factor.

    With an hourly ``mef`` the annual energy is spread over the hours using
    ``profile`` (uniform if omitted); a flat MEF gives the scalar result.
    """
    c_res = p.c_res if c_res is None else c_res
    if scc < 0:
        raise CbaError("scc must be >= 0")
    eta_ev = p.eta_ev if p.eta_ev_co2 is None else p.eta_ev_co2
    eta_et = p.eta_et if p.eta_et_co2 is None else p.eta_et_co2
    energy = c_res * p.flh_res + n_ev * eta_ev + n_et * eta_et
    if isinstance(mef, HourlySeries):
        if min(mef.values) < 0:
            raise CbaError("mef must be >= 0")
        factor = _weighted_mean(mef.values, profile)
    else:
        if mef < 0:
            raise CbaError("mef must be >= 0")
        factor = float(mef)
    return p.r_co2 * energy * factor * scc / _M


def _damage(p: BenefitParams, country: str) -> Mapping[str, float]:
    if country in p.damage_cost:
        return p.damage_cost[country]
    if "*" in p.damage_cost:
        return p.damage_cost["*"]
    raise MissingPollutantFactor(f"no damage costs for {country!r}")


def rap_annual(
    p: BenefitParams,
    n_ev: float,
    n_et: float,
    c_res: Optional[float] = None,
    pollutants: Optional[Iterable[str]] = None,
    country: str = "*",
) -> float:
    c_res = p.c_res if c_res is None else c_res
    pollutants = p.pollutants if pollutants is None else tuple(pollutants)
    if not pollutants:
        return 0.0
    damage = _damage(p, country)
    total = 0.0
    for pol in pollutants:
        try:
            a_ev, a_et, ef, dc = p.alpha_ev[pol], p.alpha_et[pol], p.ef_poll[pol], damage[pol]
        except KeyError as exc:
            raise MissingPollutantFactor(f"{pol}: missing factor {exc}") from None
        kg = (
            a_ev * p.d_ev * n_ev
            + a_et * p.d_et * n_et * p.r_odp
            + ef * c_res * p.flh_res * p.r_dec * p.r_odp
        )
        total += kg * dc
    return total / _M


# --------------------------------------------------------------------------
# flexibility ledger


@dataclass(frozen=True)
class FlexLedger:
    budget: Decimal
    demands: tuple
    allocations: tuple
    residual: Decimal
    channels: tuple = LEDGER_CHANNELS

    def ratio(self, i: int) -> float:
        d = self.demands[i]
        return 1.0 if d == 0 else float(self.allocations[i] / d)

    def as_dict(self) -> dict:
        return dict(zip(self.channels, self.allocations))


def allocate_flexibility(budget, demands: Sequence) -> FlexLedger:
    """Greedy fill of ``budget`` MWh into the channels in fixed order.

    Arithmetic is exact decimal; an inexact operation raises rather than
    leaking a rounding residue into the conservation identity.
    """
    if len(demands) != len(LEDGER_CHANNELS):
        raise CbaError(f"need {len(LEDGER_CHANNELS)} channel demands, got {len(demands)}")
    b = money(budget)
    ds = tuple(money(d) for d in demands)
    if b < 0 or any(d < 0 for d in ds):
        raise CbaError("budget and demands must be >= 0")
    nonzero = [x for x in (b, *ds) if x]
    # enough digits to span every operand, so differences stay exact
    span = max(x.adjusted() for x in nonzero) - min(x.as_tuple().exponent for x in nonzero) if nonzero else 0
    with localcontext() as ctx:
        ctx.prec = max(28, span + 2)
        ctx.traps[Inexact] = True
        remaining = b
        alloc = []
        for d in ds:
            a = min(d, remaining)
            alloc.append(a)
            remaining -= a
    return FlexLedger(b, ds, tuple(alloc), remaining)


def diurnal_emission_delta(baseline: HourlySeries, shifted: HourlySeries, mef: HourlySeries) -> float:
    """tCO2 avoided per day (or year, at 8760 resolution) by a load shift."""
    if not (len(baseline) == len(shifted) == len(mef)):
        raise MixedResolution("baseline, shifted and mef must share resolution")
    if abs(baseline.total() - shifted.total()) > 1e-6:
        raise EnergyNotConserved(f"shift moves {shifted.total() - baseline.total():+.6g} MWh net")
    return math.fsum((b - s) * m for b, s, m in zip(baseline.values, shifted.values, mef.values))


# --------------------------------------------------------------------------
# stream table


@dataclass(frozen=True)
class StreamTable:
    """Annual monetised benefits in M€ per (stream, country)."""

    axis: TimeAxis
    countries: tuple
    cells: Mapping[tuple, YearSeries]

    def __post_init__(self):
        for s in STREAMS:
            for c in self.countries:
                if (s, c) not in self.cells:
                    raise CbaError(f"missing stream cell {(s, c)}")

    def series(self, stream: str, country: Optional[str] = None) -> YearSeries:
        if country is not None:
            return self.cells[(stream, country)]
        out = None
        for c in self.countries:
            s = self.cells[(stream, c)]
            out = s if out is None else out + s
        return out

    def value(self, stream: str, country: str, year: int) -> Decimal:
        return self.cells[(stream, country)][year]

    def country_series(self, country: str) -> YearSeries:
        out = None
        for s in STREAMS:
            x = self.cells[(s, country)]
            out = x if out is None else out + x
        return out

    def annual_total(self) -> YearSeries:
        out = None
        for s in STREAMS:
            x = self.series(s)
            out = x if out is None else out + x
        return out

    def stream_totals(self) -> dict:
        return {s: self.series(s).total() for s in STREAMS}

    def grand_total(self) -> Decimal:
        return sum((self.series(s).total() for s in STREAMS), Decimal(0))

    def scaled(self, multipliers: Mapping[str, Decimal]) -> "StreamTable":
        cells = {}
        for (s, c), v in self.cells.items():
            k = multipliers.get(s)
            cells[(s, c)] = v if k is None else v.scale(money(k))
        return StreamTable(self.axis, self.countries, cells)

    def aggregate(self, label: str = "ALL") -> "StreamTable":
        return StreamTable(self.axis, (label,), {(s, label): self.series(s) for s in STREAMS})

    def only(self, country: str) -> "StreamTable":
        return StreamTable(self.axis, (country,), {(s, country): self.cells[(s, country)] for s in STREAMS})

    def split(self, shares: Mapping[str, Decimal]) -> "StreamTable":
        """Split a single-country table by exact shares; the last country takes the remainder."""
        if len(self.countries) != 1:
            raise CbaError("split needs a single-country (aggregate) table")
        src = self.countries[0]
        ids = tuple(shares)
        cells = {}
        for s in STREAMS:
            total = self.cells[(s, src)]
            acc = None
            for cid in ids[:-1]:
                part = total.scale(money(shares[cid]))
                cells[(s, cid)] = part
                acc = part if acc is None else acc + part
            cells[(s, ids[-1])] = total if acc is None else total - acc
        return StreamTable(self.axis, ids, cells)

    @classmethod
    def from_rows(cls, axis: TimeAxis, rows: Mapping[int, Mapping[str, Decimal]], country: str = "ALL"):
        cells = {
            (s, country): YearSeries(axis, tuple(money(rows[y][s]) for y in axis.years)) for s in STREAMS
        }
        return cls(axis, (country,), cells)


# Default driver map: exponents fitted in log space to the aggregate fixture
# trajectories with fit_driver_weights (see demos/03_benefit_streams.py).
DEFAULT_DRIVERS: dict = {
    "ROD": ("composite", {"fleet": 0.827, "res": 0.154}),
    "ROETAS": ("composite", {"fleet": 0.342, "res": 0.0}),
    "CSDR_PLR": ("composite", {"fleet": 0.767, "res": 0.0}),
    "FES": ("composite", {"fleet": 0.779, "res": 0.0}),
    "AEC": ("composite", {"fleet": 0.0, "res": 0.627}),
    "GSMS": ("composite", {"fleet": 0.549, "res": 0.0}),
    "CO2": ("composite", {"fleet": 0.292, "res": 0.0}),
    "RAP": ("composite", {"fleet": 0.587, "res": 0.268}),
}


def country_params(p: BenefitParams, proj: ProjectionSet, country: str, year: Optional[int] = None) -> BenefitParams:
    """Bind the physical quantities of one country and year into ``p``."""
    year = proj.axis.first_year if year is None else year
    kw = {"c_res": proj.res_capacity[country][year] * 1000.0}
    n_ev = proj.ev_stock[country][year] * 1000.0
    n_et = proj.et_stock[country][year] * 1000.0
    if p.kw_per_ev is not None:
        kw["p_ev"] = n_ev * p.kw_per_ev / 1000.0
    if p.kw_per_et is not None:
        kw["p_et"] = n_et * p.kw_per_et / 1000.0
    return replace(p, **kw)


def base_year_values(
    p: BenefitParams,
    n_ev: float,
    n_et: float,
    scc: float,
    mef: Union[float, HourlySeries],
    country: str = "*",
    aec_mode: str = "parametric",
    aec_delta: Optional[KpiDelta] = None,
    wholesale: Optional[float] = None,
    roetas_mode: str = "proxy",
    roetas_hourly: Optional[RoetasHourly] = None,
    ledger: bool = False,
) -> tuple[dict, Optional[FlexLedger]]:
    """Base-year M€ per stream for one country, optionally ledger-capped."""
    vals = {
        "ROD": rod_annual(p),
        "ROETAS": roetas_annual(p, roetas_mode, roetas_hourly),
        "CSDR_PLR": csdr_plr_annual(p),
        "FES": fes_annual(p, n_ev, n_et),
        "AEC": aec_annual(p, aec_mode, aec_delta, wholesale),
        "GSMS": gsms_annual(p, n_ev, n_et),
        "CO2": co2_annual(p, n_ev, n_et, scc, mef),
        "RAP": rap_annual(p, n_ev, n_et, country=country),
    }
    if not ledger:
        return vals, None

    energy = _fleet_energy(p, n_ev, n_et)
    # default envelope: all energy the platform coordinates (charging plus RES output)
    budget = energy + p.c_res * p.flh_res if p.flex_budget_mwh is None else p.flex_budget_mwh
    reliability = (p.r_gsms + p.r_gsstab) * energy
    if aec_mode == "parametric":
        absorption = p.res_curt * p.c_res * p.flh_res
    else:
        absorption = max(aec_delta.delta, 0.0)
    if roetas_mode == "proxy":
        arbitrage = p.f_arb * (p.c_res * p.flh_res + (p.p_ev + p.p_et) * p.h_yr)
        arb_value, anc_value = vals["ROETAS"], 0.0
    else:
        arbitrage = math.fsum(max(q, 0.0) for q in roetas_hourly.q_flex_odp)
        arb_value, anc_value = _roetas_hourly_parts(p, roetas_hourly)
    residual_dr = _dr_volume(p) + p.r_peak * _base_energy(p)
    led = allocate_flexibility(budget, (reliability, absorption, arbitrage, residual_dr))

    r0, r1, r2, r3 = (led.ratio(i) for i in range(4))
    deferral = p.c_od_base * p.c_res * p.flh_res * p.unit_bridge
    vals["GSMS"] = (vals["GSMS"] - deferral) * r0 + deferral
    vals["AEC"] *= r1
    vals["ROETAS"] = arb_value * r2 + anc_value
    vals["CSDR_PLR"] *= r3
    return vals, led


def benefits_table(
    model: AssumptionModel,
    proj: ProjectionSet,
    params: BenefitParams,
    drivers: Optional[Mapping[str, Union[DriverIndex, tuple, str]]] = None,
    ledger: bool = True,
    aec_mode: str = "parametric",
    country_overrides: Optional[Mapping[str, BenefitParams]] = None,
    aec_deltas: Optional[Mapping[str, KpiDelta]] = None,
    wholesale: Optional[Mapping[str, float]] = None,
    roetas_mode: str = "proxy",
    roetas_hourly: Optional[Mapping[str, RoetasHourly]] = None,
    mef: Optional[Mapping[str, Union[float, HourlySeries]]] = None,
) -> tuple[StreamTable, dict]:
    """Formula-path stream table: base-year value x driver(year) per cell.

    CO2 is re-valued each year at that year's SCC. ``c_od_base`` is an
    aggregate figure, so unless a country override is given it is split by
    cost share. Returns the table and an audit dict holding base-year values
    and ledgers per country.
    """
    axis = proj.axis
    drivers = DEFAULT_DRIVERS if drivers is None else drivers
    cells, audit = {}, {}
    for a in model.countries:
        cid = a.country.id
        base = (country_overrides or {}).get(cid)
        if base is None:
            base = replace(params, c_od_base=params.c_od_base * a.cost_share)
        p = country_params(base, proj, cid)
        n_ev = proj.ev_stock[cid][axis.first_year] * 1000.0
        n_et = proj.et_stock[cid][axis.first_year] * 1000.0
        m = (mef or {}).get(cid)
        if m is None:
            m = p.mef_co2 if p.mef_co2 is not None else a.grid_co2_intensity_0 / 1000.0
        scc0 = interpolate_scc(a, axis.first_year, axis)
        vals, led = base_year_values(
            p, n_ev, n_et, scc0, m,
            country=cid,
            aec_mode=aec_mode,
            aec_delta=(aec_deltas or {}).get(cid),
            wholesale=(wholesale or {}).get(cid),
            roetas_mode=roetas_mode,
            roetas_hourly=(roetas_hourly or {}).get(cid),
            ledger=ledger,
        )
        audit[cid] = {"base_year": vals, "ledger": led}
        for s in STREAMS:
            spec = drivers[s]
            if isinstance(spec, DriverIndex):
                idx = spec
            elif isinstance(spec, str):
                idx = build_driver(spec, proj, cid)
            else:
                idx = build_driver(spec[0], proj, cid, spec[1])
            row = []
            for y in axis.years:
                v = vals[s] * idx[y]
                if s == "CO2" and scc0 > 0:
                    v *= interpolate_scc(a, y, axis) / scc0
                row.append(money(v))
            cells[(s, cid)] = YearSeries(axis, tuple(row))
    return StreamTable(axis, model.ids, cells), audit


def calibrate_unit_bridge(
    model: AssumptionModel, proj: ProjectionSet, params: BenefitParams, target: float = 23.3
) -> float:
    """``unit_bridge`` that makes first-year aggregate GSMS equal ``target`` M€.

    GSMS is affine in ``unit_bridge``, so two evaluations pin it down.
    """
    flat = {s: "flat" for s in STREAMS}

    def gsms(ub):
        t, _ = benefits_table(model, proj, params.with_(unit_bridge=ub), flat, ledger=False)
        return float(t.series("GSMS")[proj.axis.first_year])

    g0, g1 = gsms(0.0), gsms(1e-7)
    if g1 == g0:
        raise CbaError("GSMS does not depend on unit_bridge (zero RES capacity or downtime cost)")
    ub = (target - g0) * 1e-7 / (g1 - g0)
    if ub < 0:
        raise CbaError(f"target {target} below the energy-only GSMS value {g0:.3f}")
    return ub
