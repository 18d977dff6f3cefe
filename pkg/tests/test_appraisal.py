from __future__ import annotations

from dataclasses import replace
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from odp_cba.appraisal import (
    AppraisalInputs,
    CashflowTable,
    DiscountSpec,
    RateOutOfRange,
    ZeroCostDivision,
    appraise,
    bcr_of,
    discount_series,
    run_deterministic,
)
from odp_cba.benefits import null_effects
from odp_cba.model import TimeAxis, YearSeries, money

AX1 = TimeAxis(2025, 2026, 2026)
AX2 = TimeAxis(2025, 2026, 2027)


def test_one_period_identity(oracle):
    pv = discount_series(YearSeries(AX1, (money(104.0),)), DiscountSpec(0.04))
    assert pv == Decimal(100) == Decimal(repr(oracle["formulas"]["discount_one"]))


def test_two_flows(oracle):
    pv = discount_series(YearSeries(AX2, (money(104.0), money(108.16))), DiscountSpec(0.04))
    assert pv == Decimal(200)
    assert float(pv) == oracle["formulas"]["discount_two"]


def test_zero_rate_is_plain_sum():
    s = YearSeries(AX2, (money(1.5), money(2.25)))
    assert discount_series(s, DiscountSpec(0.0)) == Decimal("3.75")


def test_already_discounted_is_plain_sum():
    s = YearSeries(AX2, (money(1.5), money(2.25)))
    assert discount_series(s, DiscountSpec(0.07), already_discounted=True) == Decimal("3.75")


def test_rate_bounds():
    with pytest.raises(RateOutOfRange):
        DiscountSpec(0.5)
    with pytest.raises(RateOutOfRange):
        DiscountSpec(-0.5)


def test_bcr_zero_costs():
    with pytest.raises(ZeroCostDivision):
        bcr_of(Decimal(1), Decimal(0))


vals = st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=10, max_size=10)


@given(vals, vals, st.floats(-10, 10), st.floats(-10, 10), st.floats(-0.2, 0.3))
def test_discount_linear(x, y, a, b, r):
    ax = TimeAxis()
    d = DiscountSpec(r)
    sx, sy = YearSeries(ax, tuple(x)), YearSeries(ax, tuple(y))
    comb = YearSeries(ax, tuple(a * u + b * v for u, v in zip(x, y)))
    lhs = float(discount_series(comb, d))
    rhs = a * float(discount_series(sx, d)) + b * float(discount_series(sy, d))
    assert lhs == pytest.approx(rhs, abs=1e-9 * max(1.0, abs(lhs)) + 1e-6)


def test_headline(run, oracle):
    r = run.result
    f = oracle["fixture"]
    assert r.pv_benefits == Decimal("1233.93") and float(r.pv_benefits) == f["pv_benefits"]
    assert r.pv_costs == Decimal("877.2")
    assert r.npv == r.pv_benefits - r.pv_costs
    assert float(r.bcr) == pytest.approx(f["bcr"], rel=1e-15)
    assert round(r.npv, 1) == Decimal("356.7")
    assert abs(float(r.bcr) - 1.41) <= 0.005


def test_bcr_npv_sign_agree(run):
    r = run.result
    assert (r.bcr > 1) == (r.npv > 0)


def test_payback_conventions(run, oracle):
    r = run.result
    assert r.payback_eoy == oracle["fixture"]["payback_eoy"] == 2032
    assert r.payback_interp == pytest.approx(oracle["fixture"]["payback_interp"], abs=1e-12)
    assert 2031.0 <= r.payback_interp <= 2032.0


def test_payback_none_when_never_positive(run):
    x = run.inputs.scaled({"CAPEX": Decimal(10)})
    r = appraise(x)
    assert r.payback_eoy is None and r.payback_interp is None
    assert all(c < 0 for c in r.cumulative)


def test_benefits_equal_costs():
    ax = TimeAxis()
    z = YearSeries.constant(ax, Decimal(0))
    ben = YearSeries.constant(ax, Decimal(5))
    x = AppraisalInputs(ax, {"ROD": ben}, {"CAPEX": ben, "OPEX": z, "ONE_TIME": z})
    r = appraise(x)
    assert r.npv == 0 and r.bcr == 1


@given(st.decimals("0.01", "100", places=2))
def test_bcr_scale_invariant(run, k):
    base = run.result
    scaled = appraise(run.inputs.scaled({c: k for c in run.inputs.columns}))
    assert scaled.bcr == pytest.approx(base.bcr, rel=Decimal("1e-20"))
    assert abs(scaled.npv - base.npv * k) <= Decimal("1e-20")


def test_npv_decreasing_in_rate(run, oracle):
    npvs = [appraise(run.inputs.with_rate(r)).npv for r in (0.03, 0.04, 0.05, 0.06, 0.07)]
    assert all(a > b for a, b in zip(npvs, npvs[1:]))
    for r, v in zip(("0.03", "0.04", "0.05", "0.06", "0.07"), npvs):
        assert float(v) == pytest.approx(oracle["rediscount"][r], rel=1e-9)


def test_cashflow_net_identity(run):
    cf = CashflowTable.from_inputs(run.inputs)
    for y in cf.axis.years:
        assert cf.net[y] == cf.benefits[y] - cf.capex[y] - cf.opex[y] - cf.one_time[y]


def test_null_effect_run(formula_run):
    fr = formula_run
    det = run_deterministic(fr.model, fr.generated_projections, null_effects(fr.params), fr.costs)
    assert det.result.npv == -det.result.pv_costs
    assert det.result.bcr == 0


def test_formula_run_discounts_explicitly(formula_run):
    r = formula_run.result
    undiscounted = formula_run.inputs.benefit_series().total()
    assert r.pv_benefits < undiscounted
    det = run_deterministic(
        formula_run.model, formula_run.generated_projections, formula_run.params, formula_run.costs,
        drivers=formula_run.drivers,
    )
    assert det.result.npv == r.npv
    assert len(det.audit["annual_net"]) == 10


def test_override_rate_through_appraise(run):
    a = appraise(run.inputs, replace(run.inputs.discount, rate=0.05))
    assert a.rate == 0.05 and a.npv < run.result.npv
