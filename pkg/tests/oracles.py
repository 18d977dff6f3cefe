"""Independent reference computations for the test suite.

Everything here is recomputed from first principles (exact fractions or
plain floats, straight from the fixture CSVs) without importing the engine.
``python tests/oracles.py`` refreezes ``oracle_values.json``; the tests read
the frozen file and ``test_oracles.py`` checks it still matches.
"""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction as F
from pathlib import Path

HERE = Path(__file__).parent
FIXTURES = HERE.parent / "src" / "odp_cba" / "data" / "fixtures"
FROZEN = HERE / "oracle_values.json"
STREAMS = ("ROD", "ROETAS", "CSDR_PLR", "FES", "AEC", "GSMS", "CO2", "RAP")
YEARS = list(range(2026, 2036))


def _rows(name):
    with (FIXTURES / f"{name}.csv").open(newline="") as fh:
        return list(csv.DictReader(fh))


def formulas() -> dict:
    return {
        "rod": float(F("24.2") * F("1.15") * F("0.13")),
        "scc_2030": 85 + (120 - 85) * 4 / 9,
        "aec_parametric": float(F("0.01") * 20_000 * 1200 * 50 / 10**6),
        "roetas_proxy": float(F("0.05") * 10**7 * 25 / 10**6),
        "csdr_second_term": float(10 * F("0.15") * 10**6 / 10**6),
        "fes": float(F("0.01") * (494_600 * 800 + 5_100 * 1920) / 10**6),
        "gsms_first_term": float(F("0.05") * 100_000 * 3 * 500 / 10**6),
        "co2_scalar": float(F("0.12") * 10**7 * F("0.19") * 85 / 10**6),
        "rap_vehicle_term": float(F("0.01") * 10_000 * 100_000 * 1 / 10**6),
        "ledger_100_40x4": [40, 40, 20, 0],
        "diurnal_shift": float(10 * F("0.28") - 10 * F("0.10")),
        "discount_one": float(F(104) / F("1.04")),
        "discount_two": float(F(104) / F("1.04") + F("108.16") / F("1.04") ** 2),
    }


def projections() -> dict:
    out = {}
    for c, s0, g in (("AT", 343.8, 0.16), ("HU", 100.8, 0.179), ("SI", 50.0, 0.155)):
        out[f"ev_{c}_2035"] = s0 * (1 + g) ** 9
    out["fleet_index_AT_2027"] = (343.8 * 1.16 + 4.4 * 1.13) / (343.8 + 4.4)
    return out


def fixture_headline() -> dict:
    ben = _rows("annual_benefits")
    cost = _rows("annual_costs")
    pv = {r["stream"]: F(r["pv"]) for r in _rows("stream_pv")}
    one_time = next(F(r["pv"]) for r in _rows("capex_items") if r["item"] == "Subtotal core technology platform")
    col_sum = {s: sum(F(r[s]) for r in ben) for s in STREAMS}
    b_year = [sum(F(r[s]) * pv[s] / col_sum[s] for s in STREAMS) for r in ben]
    c_year = [F(r["CAPEX"]) + F(r["OPEX"]) for r in cost]
    c_year[0] += one_time
    pv_b, pv_c = sum(b_year), sum(c_year)

    def payback(bs, cs):
        cum, prev = 0, 0
        for y, b, c in zip(YEARS, bs, cs):
            cum += b - c
            if cum >= 0:
                return y, float((y - 1) + (-prev) / (cum - prev))
            prev = cum
        return None, None

    eoy, interp = payback(b_year, c_year)
    raw_b = [sum(F(r[s]) for s in STREAMS) for r in ben]
    raw_eoy, raw_interp = payback(raw_b, c_year)
    return {
        "pv_benefits": float(pv_b),
        "pv_costs": float(pv_c),
        "npv": float(pv_b - pv_c),
        "bcr": float(pv_b / pv_c),
        "payback_eoy": eoy,
        "payback_interp": interp,
        "raw_payback_eoy": raw_eoy,
        "raw_payback_interp": raw_interp,
        "raw_column_sums": {s: float(v) for s, v in col_sum.items()},
        "scenario_benefits_0_9": float(pv_b * F("0.9") - pv_c),
        "scenario_costs_1_1": float(pv_b - pv_c * F("1.1")),
        "capex_sum": float(sum(F(r["CAPEX"]) for r in cost)),
        "opex_sum": float(sum(F(r["OPEX"]) for r in cost)),
        "one_time": float(one_time),
        "cost_split_45_35_20": [float(pv_c * F(s)) for s in ("0.45", "0.35", "0.20")],
        # one-way ranges: 2 * half-width * slope * affected PV
        "tornado_ai": float(2 * F("0.10") * pv_b),
        "tornado_adoption": float(2 * F("0.15") * sum(pv[s] for s in ("CSDR_PLR", "FES", "GSMS", "CO2", "RAP"))),
        "tornado_capex": float(2 * F("0.10") * (sum(F(r["CAPEX"]) for r in cost) + one_time)),
        "tornado_opex": float(2 * F("0.10") * sum(F(r["OPEX"]) for r in cost)),
    }


def rediscount(rate: float) -> float:
    """NPV of the reconciled fixture flows re-discounted from 4% to ``rate``."""
    ben = _rows("annual_benefits")
    cost = _rows("annual_costs")
    pv = {r["stream"]: float(r["pv"]) for r in _rows("stream_pv")}
    col_sum = {s: math.fsum(float(r[s]) for r in ben) for s in STREAMS}
    total = 0.0
    for k, (rb, rc) in enumerate(zip(ben, cost)):
        net = sum(float(rb[s]) * pv[s] / col_sum[s] for s in STREAMS) - float(rc["CAPEX"]) - float(rc["OPEX"])
        if k == 0:
            net -= 89.6
        total += net * (1.04 / (1 + rate)) ** (k + 1)
    return total


def costs() -> dict:
    d = 1 - (26.3 / 37.4) ** (1 / 9)
    series = [37.4 * (1 - d) ** k for k in range(10)]
    return {"opex_decay": d, "opex_series_sum": math.fsum(series), "opex_series": series}


def unit_costs() -> dict:
    """EV unit cost so discounted new-EV outlays hit 280 M€ (generated stocks, 4%)."""
    weighted = 0.0
    for s0, g in ((343.8, 0.16), (100.8, 0.179), (50.0, 0.155)):
        stock = [s0 * 1000 * (1 + g) ** k for k in range(10)]
        new = [stock[0]] + [max(b - a, 0) for a, b in zip(stock, stock[1:])]
        weighted += sum(n / 1.04 ** (k + 1) for k, n in enumerate(new))
    return {"ev_unit_cost": 280e6 / weighted}


def all_values() -> dict:
    return {
        "formulas": formulas(),
        "projections": projections(),
        "fixture": fixture_headline(),
        "rediscount": {str(r): rediscount(r) for r in (0.03, 0.04, 0.05, 0.06, 0.07)},
        "costs": costs(),
        "unit_costs": unit_costs(),
    }


def load() -> dict:
    return json.loads(FROZEN.read_text())


if __name__ == "__main__":
    FROZEN.write_text(json.dumps(all_values(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {FROZEN}")
