"""Report bundle assembly and byte-stable CSV / JSON / plot-data output.

The reporter only formats numbers produced by the pipeline. Money is written
to 0.1 M€ and ratios to 0.01 (half-even), keys sorted, ``\\n`` line ends.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .benefits import STREAMS
from .model import CbaError
from .scenarios import ScenarioSpec

__all__ = [
    "IoFailure",
    "ReportBundle",
    "build_bundle",
    "emit_report",
    "fmt_money",
    "fmt_ratio",
    "OUT_ENV",
    "PUBLISHED",
]

OUT_ENV = "ODP_CBA_OUT"

# Published headline figures the annotations compare against.
PUBLISHED = {
    "payback_year": 2031,
    "mc_mean_npv": 357.30,
    "mc_p5": 169.62,
    "mc_p95": 556.88,
    "tornado_discount_range": 13.0,
    "sensitivity_benefit_label": -0.30,
    "sensitivity_benefit_npv": 233.4,
    "sensitivity_cost_label": 0.20,
    "sensitivity_cost_npv": 269.0,
    "sensitivity_discount_shift": 3.6,
    "aec_first_year": 20.0,
}


class IoFailure(CbaError):
    pass


def _q(x, places: str) -> Decimal:
    return Decimal(str(x)).quantize(Decimal(places), rounding=ROUND_HALF_EVEN)


def fmt_money(x) -> str:
    return "" if x is None else str(_q(x, "0.1"))


def fmt_ratio(x) -> str:
    return "" if x is None else str(_q(x, "0.01"))


def _jm(x):
    return None if x is None else float(_q(x, "0.1"))


def _jr(x):
    return None if x is None else float(_q(x, "0.01"))


@dataclass
class ReportBundle:
    mode: str
    headline: dict
    annual: list
    streams: list
    countries: list
    scenarios: list = field(default_factory=list)
    tornado: list = field(default_factory=list)
    discount_sweep: list = field(default_factory=list)
    montecarlo: Optional[dict] = None
    montecarlo_countries: dict = field(default_factory=dict)
    histogram: Optional[dict] = None
    discrepancies: list = field(default_factory=list)
    fixture_findings: list = field(default_factory=list)


def _mc_dict(s) -> dict:
    return {
        "n_trials": s.n,
        "npv_mean": _jm(s.npv_mean),
        "npv_sd": _jm(s.npv_sd),
        "npv_p5": _jm(s.npv_p5),
        "npv_p50": _jm(s.npv_p50),
        "npv_p95": _jm(s.npv_p95),
        "bcr_mean": _jr(s.bcr_mean),
        "bcr_p5": _jr(s.bcr_p5),
        "bcr_p50": _jr(s.bcr_p50),
        "bcr_p95": _jr(s.bcr_p95),
        "prob_npv_pos": _jr(s.prob_npv_pos),
        "prob_bcr_gt1": _jr(s.prob_bcr_gt1),
    }


def _discrepancies(run, include_mc: bool) -> list[dict]:
    """Annotations where published figures cannot be reproduced as printed."""
    from .scenarios import apply_scenario, discount_sweep

    res = run.result
    out = [
        {
            "code": "payback_year",
            "note": "published payback year checked against both conventions",
            "published": PUBLISHED["payback_year"],
            "observed": f"end-of-year {res.payback_eoy}; interpolated {res.payback_interp:.2f}"
            if res.payback_eoy is not None
            else "no payback within horizon",
        }
    ]
    base = run.inputs
    naive_b = apply_scenario(base, ScenarioSpec("naive", benefit_multiplier=1 + PUBLISHED["sensitivity_benefit_label"])).npv
    naive_c = apply_scenario(base, ScenarioSpec("naive", cost_multiplier=1 + PUBLISHED["sensitivity_cost_label"])).npv
    d3 = apply_scenario(base, ScenarioSpec("naive", discount_override=0.03)).npv - res.npv
    out += [
        {
            "code": "sensitivity_benefit_row",
            "note": "row labelled -30% benefits; printed NPV matches a -10% change",
            "published": PUBLISHED["sensitivity_benefit_npv"],
            "observed": f"-30% gives {fmt_money(naive_b)}; -10% gives {fmt_money(apply_scenario(base, ScenarioSpec('b', benefit_multiplier=0.9)).npv)}",
        },
        {
            "code": "sensitivity_cost_row",
            "note": "row labelled +20% costs; printed NPV matches a +10% change",
            "published": PUBLISHED["sensitivity_cost_npv"],
            "observed": f"+20% gives {fmt_money(naive_c)}; +10% gives {fmt_money(apply_scenario(base, ScenarioSpec('c', cost_multiplier=1.1)).npv)}",
        },
        {
            "code": "sensitivity_discount_row",
            "note": "NPV shift from 4% to 3% discounting",
            "published": PUBLISHED["sensitivity_discount_shift"],
            "observed": fmt_money(d3),
        },
        {
            "code": "country_category_shares",
            "note": "per-country benefit category shares conflict with the aggregate stream split; excluded from checks, only country PV totals are used",
            "published": None,
            "observed": None,
        },
    ]
    sweep = dict(discount_sweep(base, [0.03, 0.07]))
    disc = next((e for e in run.tornado if e.parameter == "discount_rate"), None)
    out.append(
        {
            "code": "tornado_discount_range",
            "note": "published discount-rate swing is far below straight re-discounting over 3-7%; tornado uses a calibrated rate slope",
            "published": PUBLISHED["tornado_discount_range"],
            "observed": f"re-discounting {fmt_money(sweep[0.03] - sweep[0.07])}; calibrated {fmt_money(disc.range) if disc else 'n/a'}",
        }
    )
    if run.config.mode == "fixture":
        for f in run.fixture_check.anomalies:
            out.append({"code": f.code, "note": f.message, "published": f.observed, "observed": f.expected})
        for f in run.fixture_check.comparisons:
            if not f.within_tolerance or f.code.startswith("stream_sum"):
                out.append({"code": f.code, "note": f.message, "published": f.expected, "observed": f.observed})
        out.append(
            {
                "code": "undiscounted_label",
                "note": "annual benefit and cost tables are labelled undiscounted but sum to the published present values; treated as already discounted",
                "published": None,
                "observed": None,
            }
        )
    aec = run.formula_benefits[1]
    aec_first = sum(v["base_year"]["AEC"] for v in aec.values())
    out.append(
        {
            "code": "aec_parametric",
            "note": "parametric curtailment value with the published parameters vs the first-year fixture value",
            "published": PUBLISHED["aec_first_year"],
            "observed": fmt_money(aec_first),
        }
    )
    gen, fix = run.generated_projections, None
    try:
        from .fixtures import fixture_projections

        fix = fixture_projections(run.fixtures)
    except CbaError:
        pass
    if fix is not None:
        worst = []
        for label, g, f in (("EV", gen.ev_stock, fix.ev_stock), ("ET", gen.et_stock, fix.et_stock), ("RES", gen.res_capacity, fix.res_capacity)):
            dev = max(
                (abs(a - b) / b * 100, c, y)
                for c in f
                for y, a, b in zip(gen.axis.years, g[c].values, f[c].values)
                if b
            )
            worst.append(f"{label} {dev[1]} {dev[2]} {dev[0]:.1f}%")
        out.append(
            {
                "code": "projection_vs_fixture",
                "note": "largest deviation of generated trajectories from the fixture tables",
                "published": None,
                "observed": "; ".join(worst),
            }
        )
    if include_mc and run.montecarlo is not None:
        s = run.montecarlo.summary
        out.append(
            {
                "code": "mc_calibration",
                "note": "distribution widths are calibrated, not published",
                "published": f"mean {PUBLISHED['mc_mean_npv']}, p5 {PUBLISHED['mc_p5']}, p95 {PUBLISHED['mc_p95']}",
                "observed": f"mean {fmt_money(s.npv_mean)}, p5 {fmt_money(s.npv_p5)}, p95 {fmt_money(s.npv_p95)}",
            }
        )
    return sorted(out, key=lambda d: d["code"])


def build_bundle(run, include_mc: bool = True) -> ReportBundle:
    res = run.result
    x = run.inputs
    from .appraisal import CashflowTable

    cf = CashflowTable.from_inputs(x)
    annual = []
    for k, y in enumerate(x.axis.years):
        row = {"year": y}
        for s in STREAMS:
            row[s] = x.benefits[s].values[k]
        row.update(
            benefits=cf.benefits.values[k],
            capex=cf.capex.values[k],
            opex=cf.opex.values[k],
            one_time=cf.one_time.values[k],
            net=cf.net.values[k],
            cumulative_pv=res.cumulative[k],
        )
        annual.append(row)
    total_b = res.pv_benefits
    streams = [
        {"stream": s, "pv": x.column_pv(s), "share": (x.column_pv(s) / total_b) if total_b else None} for s in STREAMS
    ]
    countries = [
        {"country": c, "pv_benefits": r.pv_benefits, "pv_costs": r.pv_costs, "npv": r.npv, "bcr": r.bcr}
        for c, r in run.country_results.items()
    ]
    headline = {
        "pv_benefits": res.pv_benefits,
        "pv_costs": res.pv_costs,
        "npv": res.npv,
        "bcr": res.bcr,
        "payback_eoy": res.payback_eoy,
        "payback_interp": res.payback_interp,
        "discount_rate": run.discount.rate,
    }
    scen = [
        {"name": s.name, "pv_benefits": r.pv_benefits, "pv_costs": r.pv_costs, "npv": r.npv, "bcr": r.bcr}
        for s, r in run.scenarios
    ]
    torn = [
        {"parameter": e.parameter, "low": e.low, "high": e.high, "npv_low": e.npv_low, "npv_high": e.npv_high, "range": e.range}
        for e in run.tornado
    ]
    from .scenarios import discount_sweep

    sweep = [{"rate": r, "npv": v} for r, v in discount_sweep(x, [0.03, 0.04, 0.05, 0.06, 0.07])]
    bundle = ReportBundle(run.config.mode, headline, annual, streams, countries, scen, torn, sweep)
    if include_mc:
        mc = run.montecarlo
        bundle.montecarlo = _mc_dict(mc.summary)
        bundle.histogram = {
            "edges": [_jm(e) for e in mc.summary.hist_edges],
            "counts": list(mc.summary.hist_counts),
        }
        bundle.montecarlo_countries = {c: _mc_dict(m.summary) for c, m in run.country_montecarlo.items()}
    bundle.discrepancies = _discrepancies(run, include_mc)
    if run.config.mode == "fixture":
        bundle.fixture_findings = [
            {"code": f.code, "kind": f.kind, "message": f.message, "acknowledged": f.code in run.fixture_check.acknowledged}
            for f in run.fixture_check.anomalies
        ]
    return bundle


# --------------------------------------------------------------------------
# serialisation

_RATIO_KEYS = {"share", "rate", "low", "high", "discount_rate", "payback_interp"}


def _is_ratio(key: str) -> bool:
    return key in _RATIO_KEYS or key.startswith(("bcr", "prob_"))


def _fmt_cell(key: str, v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    return fmt_ratio(v) if _is_ratio(key) else fmt_money(v)


def json_value(key: str, v):
    if v is None or isinstance(v, (bool, str, int)):
        return v
    if isinstance(v, (Decimal, float)):
        return _jr(v) if _is_ratio(key) else _jm(v)
    if isinstance(v, dict):
        return {k: json_value(k, x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [json_value(key, x) for x in v]
    return v


def csv_text(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    cols = list(rows[0])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt_cell(c, r[c]) for c in cols])
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def bundle_json(b: ReportBundle) -> dict:
    return {
        "mode": b.mode,
        "headline": json_value("", b.headline),
        "annual": json_value("", b.annual),
        "streams": json_value("", b.streams),
        "countries": json_value("", b.countries),
        "scenarios": json_value("", b.scenarios),
        "tornado": json_value("", b.tornado),
        "discount_sweep": json_value("", b.discount_sweep),
        "montecarlo": b.montecarlo,
        "montecarlo_countries": b.montecarlo_countries,
        "discrepancies": [json_value("", d) for d in b.discrepancies],
        "fixture_findings": b.fixture_findings,
    }


def plot_data(b: ReportBundle) -> dict:
    """Series behind the usual charts: flows, cumulative NPV, stream shares, tornado, histogram."""
    return {
        "annual_flows": {
            "year": [r["year"] for r in b.annual],
            "benefits": [_jm(r["benefits"]) for r in b.annual],
            "costs": [_jm(r["capex"] + r["opex"] + r["one_time"]) for r in b.annual],
            "net": [_jm(r["net"]) for r in b.annual],
        },
        "cumulative_pv": {"year": [r["year"] for r in b.annual], "value": [_jm(r["cumulative_pv"]) for r in b.annual]},
        "stream_pv": {"stream": [s["stream"] for s in b.streams], "pv": [_jm(s["pv"]) for s in b.streams]},
        "countries": {
            "country": [c["country"] for c in b.countries],
            "npv": [_jm(c["npv"]) for c in b.countries],
            "bcr": [_jr(c["bcr"]) for c in b.countries],
        },
        "tornado": {
            "parameter": [t["parameter"] for t in b.tornado],
            "npv_low": [_jm(t["npv_low"]) for t in b.tornado],
            "npv_high": [_jm(t["npv_high"]) for t in b.tornado],
        },
        "npv_histogram": b.histogram,
    }


def emit_report(b: ReportBundle, out_dir=None, formats: Iterable[str] = ("csv", "json", "plotdata")) -> list[Path]:
    """Write the bundle; ``out_dir`` falls back to ``$ODP_CBA_OUT`` then ``./odp_cba_out``."""
    out = Path(out_dir or os.environ.get(OUT_ENV) or "odp_cba_out")
    formats = set(formats)
    unknown = formats - {"csv", "json", "plotdata"}
    if unknown:
        raise IoFailure(f"unknown formats {sorted(unknown)}")
    written = []
    if "json" in formats:
        written.append(_write(out / "report.json", json_text(bundle_json(b))))
    if "plotdata" in formats:
        written.append(_write(out / "plotdata.json", json_text(plot_data(b))))
    if "csv" in formats:
        tables = {
            "headline.csv": [b.headline],
            "annual.csv": b.annual,
            "streams.csv": b.streams,
            "countries.csv": b.countries,
            "scenarios.csv": b.scenarios,
            "tornado.csv": [{k: t[k] for k in ("parameter", "low", "high", "range", "npv_low", "npv_high")} for t in b.tornado],
            "discrepancies.csv": [{k: d[k] for k in ("code", "note", "published", "observed")} for d in b.discrepancies],
        }
        if b.montecarlo:
            tables["montecarlo.csv"] = [{"scope": "ALL", **b.montecarlo}] + [
                {"scope": c, **m} for c, m in sorted(b.montecarlo_countries.items())
            ]
        for name, rows in sorted(tables.items()):
            written.append(_write(out / name, csv_text(rows)))
    return written
