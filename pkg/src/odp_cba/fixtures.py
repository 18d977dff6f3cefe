"""Published-figure fixture pack: loading, checksum verification, and
consistency checks.

The pack lives in ``data/fixtures`` next to a ``manifest.json`` holding the
SHA-256 of every file and the list of acknowledged findings.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Union

from .benefits import STREAMS, StreamTable
from .costs import CapexItem, CapexPlan, CostSchedule, OpexPlan, fit_opex_decay
from .model import DEFAULT_AXIS, CbaError, TimeAxis, YearSeries
from .projections import ProjectionSet

log = logging.getLogger(__name__)

__all__ = [
    "MissingFixture",
    "ChecksumMismatch",
    "MalformedRow",
    "FixturePack",
    "Finding",
    "FixtureCheck",
    "default_fixture_dir",
    "load_fixtures",
    "write_manifest",
    "check_fixtures",
    "fixture_projections",
    "fixture_stream_table",
    "fixture_costs",
    "fixture_capex_plan",
    "fixture_opex_plan",
    "country_shares",
]

FILES = {
    "fleet_stock": ["year", "EV_AT", "EV_HU", "EV_SI", "ET_AT", "ET_HU", "ET_SI"],
    "res_capacity": ["year", "AT", "HU", "SI"],
    "annual_benefits": ["year", *STREAMS, "TOTAL"],
    "annual_costs": ["year", "CAPEX", "OPEX", "TOTAL"],
    "stream_pv": ["stream", "pv"],
    "country_pv": ["country", "benefits_pv", "costs_pv", "npv", "bcr"],
    "capex_items": ["group", "item", "pv", "ai_related"],
    "opex_categories": ["category", "annual_avg_pv", "ai_related"],
}
ANNUAL = ("fleet_stock", "res_capacity", "annual_benefits", "annual_costs")

# consistency-check thresholds
ROW_TOTAL_TOL_PER_COMPONENT = Decimal("0.05")
TREND_NEIGHBOUR_AGREEMENT = 0.25
TREND_REL_JUMP = 0.15
TREND_ABS_JUMP = 0.5
STREAM_SUM_TOL = 0.05
# Reconciled cells and country shares are held to these quanta so that
# splitting and re-summing stays inside the decimal context (no rounding).
RECONCILE_QUANTUM = Decimal("1e-12")
SHARE_QUANTUM = Decimal("1e-9")


class MissingFixture(CbaError):
    pass


class ChecksumMismatch(CbaError):
    pass


class MalformedRow(CbaError):
    def __init__(self, table: str, row: int, message: str):
        self.table, self.row = table, row
        super().__init__(f"{table}.csv row {row}: {message}")


def default_fixture_dir() -> Path:
    return Path(str(resources.files("odp_cba") / "data" / "fixtures"))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(directory: Union[str, Path], known: Optional[list] = None) -> Path:
    """(Re)write ``manifest.json`` for the CSVs in ``directory``."""
    d = Path(directory)
    man = d / "manifest.json"
    if known is None and man.exists():
        known = json.loads(man.read_text()).get("acknowledged", [])
    doc = {
        "files": {f"{n}.csv": _sha256(d / f"{n}.csv") for n in sorted(FILES)},
        "acknowledged": sorted(known or []),
    }
    man.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return man


def _num(table: str, row: int, value: str) -> Decimal:
    try:
        v = Decimal(value.strip())
    except (InvalidOperation, AttributeError):
        raise MalformedRow(table, row, f"not a number: {value!r}") from None
    if not v.is_finite():
        raise MalformedRow(table, row, f"not finite: {value!r}")
    return v


def _read(directory: Path, name: str) -> list[dict]:
    path = directory / f"{name}.csv"
    if not path.exists():
        raise MissingFixture(f"missing fixture {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(name, 1, "empty file") from None
        if header != FILES[name]:
            raise MalformedRow(name, 1, f"header {header} != {FILES[name]}")
        rows = []
        for i, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise MalformedRow(name, i, f"expected {len(header)} fields, got {len(rec)}")
            rows.append(dict(zip(header, rec)))
    return rows


def _annual(name: str, rows: list[dict], axis: TimeAxis) -> dict[int, dict[str, Decimal]]:
    out = {}
    for i, rec in enumerate(rows, start=2):
        try:
            year = int(rec["year"])
        except ValueError:
            raise MalformedRow(name, i, f"bad year {rec['year']!r}") from None
        expected = axis.first_year + i - 2
        if year != expected:
            raise MalformedRow(name, i, f"year {year}, expected {expected}")
        out[year] = {k: _num(name, i, v) for k, v in rec.items() if k != "year"}
    if len(out) != len(axis):
        raise MalformedRow(name, len(rows) + 2, f"table ends at {axis.first_year + len(out) - 1}, expected {axis.last_year}")
    return out


def _flag(value: str) -> bool:
    return value.strip().lower() in ("true", "1", "yes")


@dataclass(frozen=True)
class FixturePack:
    axis: TimeAxis
    annual: Mapping[str, Mapping[int, Mapping[str, Decimal]]]
    stream_pv: Mapping[str, Decimal]
    country_pv: Mapping[str, Mapping[str, Decimal]]
    capex_items: tuple
    opex_categories: tuple
    acknowledged: tuple = ()
    directory: Optional[Path] = None

    def column(self, table: str, col: str) -> YearSeries:
        rows = self.annual[table]
        return YearSeries(self.axis, tuple(rows[y][col] for y in self.axis.years))


def load_fixtures(directory: Union[str, Path, None] = None, axis: TimeAxis = DEFAULT_AXIS, verify: bool = True) -> FixturePack:
    d = default_fixture_dir() if directory is None else Path(directory)
    man_path = d / "manifest.json"
    acknowledged: list = []
    if verify:
        if not man_path.exists():
            raise MissingFixture(f"missing manifest {man_path}")
        manifest = json.loads(man_path.read_text(encoding="utf-8"))
        acknowledged = manifest.get("acknowledged", [])
        for fname, digest in manifest["files"].items():
            p = d / fname
            if not p.exists():
                raise MissingFixture(f"missing fixture {p}")
            got = _sha256(p)
            if got != digest:
                raise ChecksumMismatch(f"{fname}: sha256 {got[:12]}... != manifest {digest[:12]}...")
    raw = {n: _read(d, n) for n in FILES}
    annual = {n: _annual(n, raw[n], axis) for n in ANNUAL}
    stream_pv = {r["stream"]: _num("stream_pv", i, r["pv"]) for i, r in enumerate(raw["stream_pv"], 2)}
    if set(stream_pv) != set(STREAMS):
        raise MalformedRow("stream_pv", len(raw["stream_pv"]) + 1, f"streams {sorted(stream_pv)}")
    country_pv = {
        r["country"]: {k: _num("country_pv", i, v) for k, v in r.items() if k != "country"}
        for i, r in enumerate(raw["country_pv"], 2)
    }
    capex = tuple(
        (r["group"], CapexItem(r["item"], _num("capex_items", i, r["pv"]), _flag(r["ai_related"])))
        for i, r in enumerate(raw["capex_items"], 2)
    )
    opex = tuple(
        (r["category"], _num("opex_categories", i, r["annual_avg_pv"]), _flag(r["ai_related"]))
        for i, r in enumerate(raw["opex_categories"], 2)
    )
    return FixturePack(axis, annual, stream_pv, country_pv, capex, opex, tuple(acknowledged), d)


# --------------------------------------------------------------------------
# derived inputs


def fixture_projections(pack: FixturePack) -> ProjectionSet:
    ev, et, res = {}, {}, {}
    for c in ("AT", "HU", "SI"):
        ev[c] = pack.column("fleet_stock", f"EV_{c}").as_float()
        et[c] = pack.column("fleet_stock", f"ET_{c}").as_float()
        res[c] = pack.column("res_capacity", c).as_float()
    return ProjectionSet(pack.axis, ev, et, res, source="fixture")


def fixture_stream_table(pack: FixturePack, reconcile: bool = True) -> StreamTable:
    """Aggregate stream table from the annual benefits fixture.

    With ``reconcile`` each stream column is rescaled so it sums to the
    published stream present value; the shape over time is kept and the last
    year absorbs the rounding remainder so the column sums exactly.
    """
    cells = {}
    for s in STREAMS:
        col = pack.column("annual_benefits", s)
        total = col.total()
        if reconcile and total:
            k = pack.stream_pv[s] / total
            vals = [(v * k).quantize(RECONCILE_QUANTUM) for v in col.values]
            vals[-1] = pack.stream_pv[s] - sum(vals[:-1], Decimal(0))
            col = YearSeries(pack.axis, tuple(vals))
        cells[(s, "ALL")] = col
    return StreamTable(pack.axis, ("ALL",), cells)


def _subtotals(pack: FixturePack) -> dict[str, Decimal]:
    return {item.item: item.pv for g, item in pack.capex_items if g == "subtotal"}


def fixture_capex_plan(pack: FixturePack, unit_costs: Optional[Mapping[str, float]] = None) -> CapexPlan:
    """One-time core items; adds a balancing line when the items miss their subtotal."""
    items = [item for g, item in pack.capex_items if g == "core"]
    subtotal = _subtotals(pack)["Subtotal core technology platform"]
    gap = subtotal - sum((i.pv for i in items), Decimal(0))
    if gap:
        log.info("core CAPEX items miss their subtotal by %s; adding a balancing line", gap)
        items.append(CapexItem("Reconciliation to stated subtotal", gap, False))
    kw = {} if unit_costs is None else {"unit_costs": dict(unit_costs)}
    return CapexPlan(tuple(items), subtotal, **kw)


def fixture_opex_plan(pack: FixturePack) -> OpexPlan:
    opex = pack.column("annual_costs", "OPEX")
    first, last = float(opex.values[0]), float(opex.values[-1])
    decay = fit_opex_decay(first, last, len(pack.axis) - 1)
    return OpexPlan.from_averages(pack.opex_categories, opex.values[0], decay)


def fixture_costs(pack: FixturePack) -> CostSchedule:
    one_time = _subtotals(pack)["Subtotal core technology platform"]
    return CostSchedule(
        pack.axis, pack.column("annual_costs", "CAPEX"), pack.column("annual_costs", "OPEX"), one_time
    )


def country_shares(pack: FixturePack) -> dict[str, dict[str, Decimal]]:
    """Benefit and cost shares per country from the published country PVs.

    Shares are quantized and the last country takes the complement, so they
    sum to exactly one.
    """

    def shares(key):
        pv = {c: v[key] for c, v in pack.country_pv.items()}
        total = sum(pv.values(), Decimal(0))
        ids = list(pv)
        out = {c: (pv[c] / total).quantize(SHARE_QUANTUM) for c in ids[:-1]}
        out[ids[-1]] = 1 - sum(out.values(), Decimal(0))
        return out

    return {"benefits": shares("benefits_pv"), "costs": shares("costs_pv")}


# --------------------------------------------------------------------------
# consistency checks


@dataclass(frozen=True)
class Finding:
    """A cell-level anomaly (``kind`` row_total or trend_break) or a cross-table check."""

    code: str
    kind: str
    message: str
    expected: Optional[float] = None
    observed: Optional[float] = None
    within_tolerance: bool = False


@dataclass
class FixtureCheck:
    anomalies: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)
    acknowledged: tuple = ()

    @property
    def unacknowledged(self) -> list:
        return [
            f
            for f in self.anomalies + [c for c in self.comparisons if not c.within_tolerance]
            if f.code not in self.acknowledged
        ]

    @property
    def ok(self) -> bool:
        return not self.unacknowledged


def _row_total_anomalies(name: str, rows: Mapping[int, Mapping[str, Decimal]]) -> list[Finding]:
    out = []
    for year, rec in rows.items():
        if "TOTAL" not in rec:
            continue
        parts = [v for k, v in rec.items() if k != "TOTAL"]
        s = sum(parts, Decimal(0))
        tol = ROW_TOTAL_TOL_PER_COMPONENT * len(parts)
        if abs(rec["TOTAL"] - s) > tol:
            out.append(
                Finding(
                    f"row_total:{name}:{year}",
                    "row_total",
                    f"{name} {year}: printed total {rec['TOTAL']} vs component sum {s}",
                    float(s),
                    float(rec["TOTAL"]),
                )
            )
    return out


def _trend_anomalies(name: str, rows: Mapping[int, Mapping[str, Decimal]]) -> list[Finding]:
    """Interior cells that jump away from two neighbours which agree with each other."""
    out = []
    years = sorted(rows)
    cols = [k for k in rows[years[0]] if k != "TOTAL"]
    for col in cols:
        xs = [float(rows[y][col]) for y in years]
        for i in range(1, len(xs) - 1):
            a, x, b = xs[i - 1], xs[i], xs[i + 1]
            if abs(a - b) > TREND_NEIGHBOUR_AGREEMENT * max(abs(a), abs(b)):
                continue
            mid = (a + b) / 2.0
            if abs(x - mid) > max(TREND_REL_JUMP * abs(mid), TREND_ABS_JUMP):
                out.append(
                    Finding(
                        f"trend_break:{name}:{col}:{years[i]}",
                        "trend_break",
                        f"{name} {col} {years[i]} = {x} breaks the {a} -> {b} trend",
                        mid,
                        x,
                    )
                )
    return out


def _compare(code: str, message: str, expected, observed, rel_tol: float = None, abs_tol: float = None) -> Finding:
    e, o = float(expected), float(observed)
    if rel_tol is not None:
        ok = abs(o - e) <= rel_tol * abs(e)
    else:
        ok = abs(o - e) <= abs_tol
    return Finding(code, "comparison", message, e, o, ok)


def check_fixtures(pack: FixturePack) -> FixtureCheck:
    """Scan the annual tables for cell anomalies and cross-check published totals."""
    chk = FixtureCheck(acknowledged=pack.acknowledged)
    for name in ANNUAL:
        chk.anomalies += _row_total_anomalies(name, pack.annual[name])
        chk.anomalies += _trend_anomalies(name, pack.annual[name])

    for s in STREAMS:
        col = pack.column("annual_benefits", s).total()
        pv = pack.stream_pv[s]
        pct = (float(col) - float(pv)) / float(pv) * 100
        chk.comparisons.append(
            _compare(
                f"stream_sum:{s}",
                f"{s}: annual column sums to {col}, stream PV {pv} ({pct:+.2f}%)",
                pv, col, rel_tol=STREAM_SUM_TOL,
            )
        )

    sub = _subtotals(pack)
    core = sum((i.pv for g, i in pack.capex_items if g == "core"), Decimal(0))
    chk.comparisons.append(
        _compare("capex_core_items", f"core CAPEX items sum to {core}, subtotal {sub['Subtotal core technology platform']}",
                 sub["Subtotal core technology platform"], core, abs_tol=0.05)
    )
    capex = pack.column("annual_costs", "CAPEX").total()
    chk.comparisons.append(
        _compare("capex_incremental", f"annual CAPEX sums to {capex}, incremental subtotal {sub['Subtotal hardware (incremental)']}",
                 sub["Subtotal hardware (incremental)"], capex, abs_tol=0.1)
    )
    opex = pack.column("annual_costs", "OPEX").total()
    total_cost = capex + opex + sub["Subtotal core technology platform"]
    bsum = sum((v["benefits_pv"] for v in pack.country_pv.values()), Decimal(0))
    csum = sum((v["costs_pv"] for v in pack.country_pv.values()), Decimal(0))
    chk.comparisons.append(
        _compare("country_benefits", f"country benefit PVs sum to {bsum}", sum(pack.stream_pv.values(), Decimal(0)), bsum, abs_tol=0.1)
    )
    chk.comparisons.append(_compare("country_costs", f"country cost PVs sum to {csum}", total_cost, csum, abs_tol=0.1))
    return chk
