"""Core domain types: countries, the appraisal time axis, money, and the
per-country assumption documents that feed every other module.

Money is carried as :class:`decimal.Decimal` millions of constant-2025 euros.
Physical quantities (stocks, capacities) stay as floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence, Union

Number = Union[float, Decimal]

__all__ = [
    "CbaError",
    "ValidationError",
    "Violation",
    "NegativeStock",
    "CagrOutOfRange",
    "CostSharesNotUnit",
    "EmptyCountrySet",
    "DuplicateCountry",
    "SccOrder",
    "YearOutOfAxis",
    "Country",
    "TimeAxis",
    "DEFAULT_AXIS",
    "money",
    "YearSeries",
    "CountryAssumptions",
    "AssumptionModel",
    "validate_assumptions",
    "interpolate_scc",
    "load_assumptions",
    "dump_assumptions",
]


class CbaError(Exception):
    """Base class for all engine errors."""


class Violation(CbaError):
    """A single broken invariant in an assumption document."""

    def __init__(self, country: str, field_name: str, message: str):
        self.country = country
        self.field = field_name
        super().__init__(f"{country}.{field_name}: {message}")


class NegativeStock(Violation):
    pass


class CagrOutOfRange(Violation):
    pass


class CostSharesNotUnit(Violation):
    pass


class EmptyCountrySet(Violation):
    pass


class DuplicateCountry(Violation):
    pass


class SccOrder(Violation):
    pass


class ValidationError(CbaError):
    """Raised with every violation found, not just the first."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")


class YearOutOfAxis(CbaError):
    pass


@dataclass(frozen=True)
class Country:
    id: str
    name: str = ""


@dataclass(frozen=True)
class TimeAxis:
    """Appraisal years ``first_year..last_year`` discounted back to ``base_year``."""

    base_year: int = 2025
    first_year: int = 2026
    last_year: int = 2035

    def __post_init__(self):
        if not (self.base_year < self.first_year <= self.last_year):
            raise CbaError(
                f"invalid axis: need base_year < first_year <= last_year, got "
                f"{self.base_year}/{self.first_year}/{self.last_year}"
            )

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(range(self.first_year, self.last_year + 1))

    def __len__(self) -> int:
        return self.last_year - self.first_year + 1

    def __contains__(self, year: object) -> bool:
        return isinstance(year, int) and self.first_year <= year <= self.last_year

    def index(self, year: int) -> int:
        if year not in self:
            raise YearOutOfAxis(f"{year} outside {self.first_year}-{self.last_year}")
        return year - self.first_year


DEFAULT_AXIS = TimeAxis()


def money(x: Any) -> Decimal:
    """Convert to a money Decimal without binary-float artefacts.

    Floats go through ``repr`` so ``money(0.1) == Decimal("0.1")``.
    """
    if isinstance(x, Decimal):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise CbaError(f"non-finite money value {x!r}")
        return Decimal(repr(x))
    return Decimal(str(x))


@dataclass(frozen=True)
class YearSeries:
    """One value per axis year. Unit is carried by context."""

    axis: TimeAxis
    values: tuple

    def __post_init__(self):
        vals = tuple(self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != len(self.axis):
            raise CbaError(f"series has {len(vals)} values for {len(self.axis)} axis years")
        for v in vals:
            if isinstance(v, Decimal):
                if not v.is_finite():
                    raise CbaError("non-finite value in series")
            elif not math.isfinite(v):
                raise CbaError("non-finite value in series")

    @classmethod
    def constant(cls, axis: TimeAxis, value: Number) -> "YearSeries":
        return cls(axis, (value,) * len(axis))

    @classmethod
    def from_mapping(cls, axis: TimeAxis, mapping: Mapping[int, Number]) -> "YearSeries":
        return cls(axis, tuple(mapping[y] for y in axis.years))

    def __getitem__(self, year: int) -> Number:
        return self.values[self.axis.index(year)]

    def __iter__(self) -> Iterator[Number]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def items(self) -> Iterator[tuple[int, Number]]:
        return zip(self.axis.years, self.values)

    def map(self, fn) -> "YearSeries":
        return YearSeries(self.axis, tuple(fn(v) for v in self.values))

    def scale(self, k: Number) -> "YearSeries":
        return self.map(lambda v: v * k)

    def _zip(self, other: "YearSeries", op) -> "YearSeries":
        if other.axis != self.axis:
            raise CbaError("axis mismatch")
        return YearSeries(self.axis, tuple(op(a, b) for a, b in zip(self.values, other.values)))

    def __add__(self, other: "YearSeries") -> "YearSeries":
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other: "YearSeries") -> "YearSeries":
        return self._zip(other, lambda a, b: a - b)

    def __mul__(self, other: "YearSeries") -> "YearSeries":
        return self._zip(other, lambda a, b: a * b)

    def total(self) -> Number:
        if self.values and isinstance(self.values[0], Decimal):
            return sum(self.values, Decimal(0))
        return math.fsum(self.values)

    def as_money(self) -> "YearSeries":
        return self.map(money)

    def as_float(self) -> "YearSeries":
        return self.map(float)


@dataclass(frozen=True)
class CountryAssumptions:
    """Per-country baseline stocks, growth, prices and valuations.

    Units: stocks in thousands of vehicles (first year), CAGRs as fractions,
    RES capacity in GW, RES addition in MW/yr, retail price and VoLL in
    €/kWh, grid intensity in gCO2/kWh, SCC in €/tCO2.
    """

    country: Country
    ev_stock_0: float
    ev_cagr: float
    et_stock_0: float
    et_cagr: float
    res_capacity_0: float
    res_addition: float
    retail_price_ev: float
    grid_co2_intensity_0: float
    voll: float
    scc_start: float
    scc_end: float
    cost_share: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "CountryAssumptions":
        d = dict(d)
        c = d.pop("country")
        country = c if isinstance(c, Country) else Country(**c)
        return cls(country=country, **{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class AssumptionModel:
    """Validated, immutable set of country assumptions on one axis."""

    axis: TimeAxis
    countries: tuple[CountryAssumptions, ...] = field(default_factory=tuple)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.country.id for c in self.countries)

    def __getitem__(self, cid: str) -> CountryAssumptions:
        for c in self.countries:
            if c.country.id == cid:
                return c
        raise KeyError(cid)

    def cost_shares(self) -> dict[str, Decimal]:
        return {c.country.id: money(c.cost_share) for c in self.countries}

    def to_dict(self) -> dict:
        return {
            "axis": asdict(self.axis),
            "countries": [c.to_dict() for c in self.countries],
        }


def _check(doc: Iterable[CountryAssumptions]) -> list[Violation]:
    doc = list(doc)
    out: list[Violation] = []
    if not doc:
        return [EmptyCountrySet("*", "countries", "no countries given")]
    seen: set[str] = set()
    for a in doc:
        cid = a.country.id
        if not cid:
            out.append(EmptyCountrySet("?", "country.id", "empty country id"))
        elif cid in seen:
            out.append(DuplicateCountry(cid, "country.id", "duplicate id"))
        seen.add(cid)
        for name in ("ev_stock_0", "et_stock_0", "res_capacity_0"):
            if getattr(a, name) < 0:
                out.append(NegativeStock(cid, name, f"{getattr(a, name)} < 0"))
        for name in ("ev_cagr", "et_cagr"):
            v = getattr(a, name)
            if not -1.0 < v < 1.0:
                out.append(CagrOutOfRange(cid, name, f"{v} not in (-1, 1)"))
        if a.scc_start > a.scc_end:
            out.append(SccOrder(cid, "scc_start", f"{a.scc_start} > scc_end {a.scc_end}"))
        for name, v in a.to_dict().items():
            if isinstance(v, float) and not math.isfinite(v):
                out.append(Violation(cid, name, "not finite"))
    total = math.fsum(a.cost_share for a in doc)
    if abs(total - 1.0) > 1e-9:
        out.append(CostSharesNotUnit("*", "cost_share", f"shares sum to {total!r}"))
    return out


def validate_assumptions(
    doc: Union[Iterable[CountryAssumptions], AssumptionModel],
    axis: TimeAxis = DEFAULT_AXIS,
) -> AssumptionModel:
    """Return a validated :class:`AssumptionModel` or raise with all violations."""
    if isinstance(doc, AssumptionModel):
        axis, doc = doc.axis, doc.countries
    doc = tuple(doc)
    violations = _check(doc)
    if violations:
        raise ValidationError(violations)
    return AssumptionModel(axis=axis, countries=doc)


def interpolate_scc(a: CountryAssumptions, year: int, axis: TimeAxis = DEFAULT_AXIS) -> float:
    """Social cost of carbon in €/tCO2, linear between first and last axis year."""
    if year not in axis:
        raise YearOutOfAxis(f"{year} outside {axis.first_year}-{axis.last_year}")
    span = axis.last_year - axis.first_year
    if span == 0:
        return a.scc_start
    return a.scc_start + (a.scc_end - a.scc_start) * (year - axis.first_year) / span


def load_assumptions(source: Union[str, Path, Mapping]) -> AssumptionModel:
    """Read and validate an assumption document (JSON path or parsed mapping)."""
    if not isinstance(source, Mapping):
        source = json.loads(Path(source).read_text(encoding="utf-8"))
    axis = TimeAxis(**source.get("axis", {}))
    doc = [CountryAssumptions.from_dict(c) for c in source.get("countries", [])]
    return validate_assumptions(doc, axis)


def dump_assumptions(m: AssumptionModel) -> str:
    return json.dumps(m.to_dict(), indent=2, sort_keys=True)
