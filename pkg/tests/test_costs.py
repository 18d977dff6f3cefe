from __future__ import annotations

from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from odp_cba.appraisal import DiscountSpec, discount_series
from odp_cba.costs import (
    ASSETS,
    CapexItem,
    CapexPlan,
    CostSchedule,
    OpexPlan,
    ai_cost_shares,
    allocate_costs_by_country,
    allocate_exact,
    calibrate_unit_costs,
    capex_schedule,
    fit_opex_decay,
    new_units,
    opex_breakdown,
    opex_schedule,
)
from odp_cba.model import DEFAULT_AXIS, CbaError, YearSeries, money


def test_zero_unit_costs_give_zero_capex(run):
    plan = CapexPlan((), Decimal(0))
    assert set(capex_schedule(plan, run.generated_projections)) == {Decimal(0)}


def test_first_year_counts_initial_stock(run):
    u = new_units(run.generated_projections, "AT")
    assert u["ev"][2026] == pytest.approx(343_800)
    assert u["res_mw"][2027] == pytest.approx(664.0)


def test_one_time_items_must_match_subtotal():
    with pytest.raises(CbaError):
        CapexPlan((CapexItem("a", Decimal("10.0")),), Decimal("10.1"))
    CapexPlan((CapexItem("a", Decimal("10.0")),), Decimal("10.05"))


def test_fixture_capex_column(run):
    capex = run.costs.capex
    assert capex[2026] == Decimal("248.5")
    assert capex[2027] == Decimal("17.3")
    assert capex[2035] == Decimal("34.3")
    assert capex.total() == Decimal("471.7")


def test_fixture_one_time_plan(run):
    plan = run.capex_plan
    assert plan.one_time_core == Decimal("89.6")
    assert sum(i.pv for i in plan.one_time_items) == Decimal("89.6")


def test_unit_cost_calibration_hits_targets(run, oracle):
    proj, rate = run.generated_projections, 0.04
    targets = {"ev": 280.0, "et": 120.0, "res_mw": 71.65}
    units = calibrate_unit_costs(proj, targets, rate)
    assert units["ev"] == pytest.approx(oracle["unit_costs"]["ev_unit_cost"], rel=1e-12)
    for asset in ASSETS:
        only = {a: (units[a] if a == asset else 0.0) for a in ASSETS}
        sched = capex_schedule(CapexPlan((), Decimal(0), only), proj)
        pv = discount_series(sched, DiscountSpec(rate))
        assert float(pv) == pytest.approx(targets[asset], rel=0.01)


def test_opex_decay_fit(oracle):
    d = fit_opex_decay(37.4, 26.3, 9)
    assert d == pytest.approx(oracle["costs"]["opex_decay"], rel=1e-12)
    assert d == pytest.approx(0.0383, abs=1e-4)


def test_opex_schedule_matches_fixture(run, oracle):
    plan = OpexPlan(run.opex_plan.categories, money(37.4), fit_opex_decay(37.4, 26.3, 9))
    sched = opex_schedule(plan, DEFAULT_AXIS)
    fixture = run.fixtures.column("annual_costs", "OPEX")
    for y in DEFAULT_AXIS.years:
        assert abs(sched[y] - fixture[y]) <= Decimal("0.2")
    assert float(sched.total()) == pytest.approx(oracle["costs"]["opex_series_sum"], abs=1e-9)
    assert abs(sched.total() - Decimal("315.9")) <= 1


def test_zero_decay_is_constant(run):
    plan = OpexPlan(run.opex_plan.categories, money(37.4), 0.0)
    assert set(opex_schedule(plan, DEFAULT_AXIS)) == {Decimal("37.4")}


def test_opex_plan_invariants(run):
    cats = run.opex_plan.categories
    assert len(cats) == 13
    with pytest.raises(CbaError):
        OpexPlan(cats, money(37.4), 0.25)
    with pytest.raises(CbaError):
        OpexPlan(cats[:-1], money(37.4), 0.01)


def test_opex_breakdown_sums_exactly(run):
    plan = run.opex_plan
    parts = opex_breakdown(plan, DEFAULT_AXIS)
    total = opex_schedule(plan, DEFAULT_AXIS)
    for y in DEFAULT_AXIS.years:
        assert sum(p[y] for p in parts.values()) == total[y]


def test_ai_cost_tagging(run):
    shares = ai_cost_shares(run.capex_plan, run.opex_plan)
    assert 0 < shares["capex_one_time"] < 1
    assert 0 < shares["opex"] < 1


def _sched(vals, one_time="10"):
    s = YearSeries(DEFAULT_AXIS, tuple(money(v) for v in vals))
    return CostSchedule(DEFAULT_AXIS, s, s, money(one_time))


def test_single_country_identity():
    sched = _sched([1.5] * 10)
    (part,) = allocate_costs_by_country(sched, {"X": Decimal(1)}).values()
    assert (part.capex, part.opex, part.one_time) == (sched.capex, sched.opex, sched.one_time)


def test_exact_45_35_20_split(run, oracle):
    total = run.costs.total()
    assert total == Decimal("877.2")
    parts = allocate_exact(total, [Decimal("0.45"), Decimal("0.35"), Decimal("0.20")])
    assert [float(p) for p in parts] == pytest.approx(oracle["fixture"]["cost_split_45_35_20"], abs=1e-9)
    assert [round(p, 1) for p in parts] == [Decimal("394.7"), Decimal("307.0"), Decimal("175.4")]


def test_permuted_shares_permute_outputs(run):
    a = allocate_costs_by_country(run.costs, {"AT": Decimal("0.45"), "HU": Decimal("0.35"), "SI": Decimal("0.2")})
    b = allocate_costs_by_country(run.costs, {"SI": Decimal("0.2"), "AT": Decimal("0.45"), "HU": Decimal("0.35")})
    for c in ("AT", "HU"):
        assert a[c].capex == b[c].capex and a[c].one_time == b[c].one_time


shares = st.lists(st.integers(1, 1000), min_size=1, max_size=6)


@given(shares, st.lists(st.decimals("0", "500", places=1), min_size=10, max_size=10))
def test_country_split_sums_exactly(weights, vals):
    w = [Decimal(x) / sum(weights) for x in weights]
    sched = _sched(vals, "89.6")
    parts = allocate_costs_by_country(sched, {f"C{i}": x for i, x in enumerate(w)})
    for y in DEFAULT_AXIS.years:
        assert sum(p.capex[y] for p in parts.values()) == sched.capex[y]
        assert sum(p.opex[y] for p in parts.values()) == sched.opex[y]
    assert sum(p.one_time for p in parts.values()) == sched.one_time


def test_fixture_total_cost_pv(run):
    assert abs(run.result.pv_costs - Decimal("877.2")) <= 1
