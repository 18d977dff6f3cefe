"""What-if scenarios and one-way (tornado) sensitivity.

Uncertain parameters act on the appraisal columns (eight benefit streams
plus CAPEX, OPEX and the one-time cost) through an :class:`ImpactMatrix`.
A parameter deviation ``delta`` scales column ``j`` by ``1 + slope * delta``;
several parameters multiply. The discount rate moves by
``rate_slope * delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Iterable, Mapping, Optional

from .appraisal import COST_COLUMNS, AppraisalInputs, AppraisalResult, appraise
from .benefits import STREAMS
from .model import CbaError, money

__all__ = [
    "PARAMETERS",
    "COLUMNS",
    "NonPositiveMultiplier",
    "ScenarioSpec",
    "ImpactMatrix",
    "TornadoEntry",
    "default_impact_matrix",
    "DEFAULT_TORNADO_RANGES",
    "DEFAULT_SCENARIOS",
    "scenario_inputs",
    "apply_scenario",
    "perturbed_inputs",
    "tornado",
    "discount_sweep",
    "calibrate_rate_slope",
]

PARAMETERS = (
    "ai_accuracy",
    "adoption_rate",
    "capex",
    "opex",
    "electricity_price",
    "data_availability",
    "discount_rate",
)
COLUMNS = STREAMS + COST_COLUMNS


class NonPositiveMultiplier(CbaError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    name: str = "base"
    benefit_multiplier: float = 1.0
    cost_multiplier: float = 1.0
    stream_multipliers: Mapping[str, float] = field(default_factory=dict)
    discount_override: Optional[float] = None

    def __post_init__(self):
        for label, v in [("benefit_multiplier", self.benefit_multiplier), ("cost_multiplier", self.cost_multiplier)] + [
            (f"stream_multipliers.{k}", v) for k, v in self.stream_multipliers.items()
        ]:
            if not (v > 0) or not math.isfinite(v):
                raise NonPositiveMultiplier(f"{self.name}: {label}={v} must be > 0")
        unknown = set(self.stream_multipliers) - set(STREAMS)
        if unknown:
            raise CbaError(f"{self.name}: unknown streams {sorted(unknown)}")

    def inverse(self) -> "ScenarioSpec":
        return ScenarioSpec(
            f"{self.name}^-1",
            1.0 / self.benefit_multiplier,
            1.0 / self.cost_multiplier,
            {k: 1.0 / v for k, v in self.stream_multipliers.items()},
            self.discount_override,
        )

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScenarioSpec":
        return cls(**d)


def scenario_inputs(base: AppraisalInputs, s: ScenarioSpec) -> AppraisalInputs:
    b = money(s.benefit_multiplier)
    c = money(s.cost_multiplier)
    mult = {k: b * money(s.stream_multipliers.get(k, 1)) for k in base.benefits}
    mult.update({k: c for k in COST_COLUMNS})
    x = base.scaled(mult)
    if s.discount_override is not None:
        x = x.with_rate(s.discount_override)
    return x


def apply_scenario(base: AppraisalInputs, s: ScenarioSpec) -> AppraisalResult:
    """Scale the designated columns, then re-appraise end to end."""
    return appraise(scenario_inputs(base, s))


@dataclass(frozen=True)
class ImpactMatrix:
    """Slopes from uncertain parameters to column multipliers and the rate."""

    parameters: tuple
    columns: tuple
    slopes: Mapping[tuple, float]
    rate_slopes: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for (p, c), v in self.slopes.items():
            if p not in self.parameters or c not in self.columns:
                raise CbaError(f"slope for unknown cell {(p, c)}")
            if not math.isfinite(v):
                raise CbaError(f"non-finite slope at {(p, c)}")
        for p, v in self.rate_slopes.items():
            if p not in self.parameters or not math.isfinite(v):
                raise CbaError(f"bad rate slope {p}={v}")

    def slope(self, p: str, col: str) -> float:
        return self.slopes.get((p, col), 0.0)

    def multipliers(self, deltas: Mapping[str, float]) -> dict[str, float]:
        out = {}
        for col in self.columns:
            m = 1.0
            for p in sorted(deltas):
                s = self.slope(p, col)
                if s:
                    m *= max(1.0 + s * deltas[p], 0.0)
            out[col] = m
        return out

    def rate(self, base_rate: float, deltas: Mapping[str, float]) -> float:
        r = base_rate
        for p in sorted(deltas):
            r += self.rate_slopes.get(p, 0.0) * deltas[p]
        return r

    def with_slopes(self, slopes: Mapping[tuple, float] = None, rate_slopes: Mapping[str, float] = None):
        return replace(
            self,
            slopes={**self.slopes, **(slopes or {})},
            rate_slopes={**self.rate_slopes, **(rate_slopes or {})},
        )

    def to_dict(self) -> dict:
        rows = {p: {c: self.slope(p, c) for c in self.columns if self.slope(p, c)} for p in self.parameters}
        return {"slopes": rows, "rate_slopes": dict(self.rate_slopes)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ImpactMatrix":
        slopes = {(p, c): float(v) for p, row in d.get("slopes", {}).items() for c, v in row.items()}
        return cls(PARAMETERS, COLUMNS, slopes, {k: float(v) for k, v in d.get("rate_slopes", {}).items()})


# Rate slope fitted with calibrate_rate_slope on the fixture base so the
# -1/+3 point discount swing spans about 13 M€ of NPV.
DEFAULT_RATE_SLOPE = 0.0816


def default_impact_matrix(rate_slope: float = DEFAULT_RATE_SLOPE) -> ImpactMatrix:
    """Shipped calibration of how each uncertain parameter reaches the columns.

    AI accuracy scales every stream; adoption the fleet-driven streams;
    electricity price the market-valued streams; data availability every
    stream at a quarter strength. CAPEX covers the one-time cost too.
    """
    s: dict = {}
    for col in STREAMS:
        s[("ai_accuracy", col)] = 1.0
        s[("data_availability", col)] = 0.25
    for col in ("CSDR_PLR", "FES", "GSMS", "CO2", "RAP"):
        s[("adoption_rate", col)] = 1.0
    for col in ("ROETAS", "AEC"):
        s[("electricity_price", col)] = 1.0
    s[("capex", "CAPEX")] = 1.0
    s[("capex", "ONE_TIME")] = 1.0
    s[("opex", "OPEX")] = 1.0
    return ImpactMatrix(PARAMETERS, COLUMNS, s, {"discount_rate": rate_slope})


DEFAULT_TORNADO_RANGES = {
    "ai_accuracy": (-0.10, 0.10),
    "adoption_rate": (-0.15, 0.15),
    "capex": (-0.10, 0.10),
    "opex": (-0.10, 0.10),
    "electricity_price": (-0.10, 0.10),
    "data_availability": (-0.10, 0.10),
    "discount_rate": (-0.01, 0.03),
}

DEFAULT_SCENARIOS = (
    ScenarioSpec("benefits -10%", benefit_multiplier=0.9),
    ScenarioSpec("benefits +10%", benefit_multiplier=1.1),
    ScenarioSpec("costs +10%", cost_multiplier=1.1),
    ScenarioSpec("costs -10%", cost_multiplier=0.9),
    ScenarioSpec("discount 3%", discount_override=0.03),
    ScenarioSpec("discount 5%", discount_override=0.05),
)


def perturbed_inputs(base: AppraisalInputs, matrix: ImpactMatrix, deltas: Mapping[str, float]) -> AppraisalInputs:
    unknown = set(deltas) - set(matrix.parameters)
    if unknown:
        raise CbaError(f"unknown parameters {sorted(unknown)}")
    mult = {c: m for c, m in matrix.multipliers(deltas).items() if c in base.columns}
    x = base.scaled(mult)
    rate = matrix.rate(base.discount.rate, deltas)
    return x.with_rate(rate) if rate != base.discount.rate else x


@dataclass(frozen=True)
class TornadoEntry:
    parameter: str
    low: float
    high: float
    npv_low: Decimal
    npv_high: Decimal

    @property
    def range(self) -> Decimal:
        return abs(self.npv_high - self.npv_low)


def tornado(
    base: AppraisalInputs,
    matrix: ImpactMatrix,
    ranges: Mapping[str, tuple] = None,
) -> list[TornadoEntry]:
    """One-way swings, widest first; ties broken by parameter name."""
    ranges = DEFAULT_TORNADO_RANGES if ranges is None else ranges
    out = []
    for p, (lo, hi) in ranges.items():
        if not lo < hi:
            raise CbaError(f"{p}: range needs low < high, got ({lo}, {hi})")
        npv_lo = appraise(perturbed_inputs(base, matrix, {p: lo})).npv
        npv_hi = appraise(perturbed_inputs(base, matrix, {p: hi})).npv
        out.append(TornadoEntry(p, lo, hi, npv_lo, npv_hi))
    return sorted(out, key=lambda e: (-e.range, e.parameter))


def discount_sweep(base: AppraisalInputs, rates: Iterable[float]) -> list[tuple[float, Decimal]]:
    """NPV under straight re-discounting at each rate."""
    return [(r, appraise(base.with_rate(r)).npv) for r in rates]


def calibrate_rate_slope(
    base: AppraisalInputs,
    target_range: float = 13.0,
    low: float = -0.01,
    high: float = 0.03,
    tol: float = 1e-6,
) -> float:
    """Bisect for the rate slope whose tornado swing over ``(low, high)`` is ``target_range``."""

    def swing(slope):
        m = ImpactMatrix(PARAMETERS, COLUMNS, {}, {"discount_rate": slope})
        t = tornado(base, m, {"discount_rate": (low, high)})[0]
        return float(t.range)

    a, b = 0.0, 1.0
    if swing(b) < target_range:
        raise CbaError("target swing not reachable with slope <= 1")
    while b - a > tol:
        mid = (a + b) / 2
        if swing(mid) < target_range:
            a = mid
        else:
            b = mid
    return (a + b) / 2
