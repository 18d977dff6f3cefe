from __future__ import annotations

from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odp_cba.model import CbaError
from odp_cba.scenarios import (
    COLUMNS,
    DEFAULT_RATE_SLOPE,
    DEFAULT_TORNADO_RANGES,
    PARAMETERS,
    ImpactMatrix,
    NonPositiveMultiplier,
    ScenarioSpec,
    apply_scenario,
    calibrate_rate_slope,
    default_impact_matrix,
    discount_sweep,
    tornado,
)


def test_identity_scenario(run):
    assert apply_scenario(run.inputs, ScenarioSpec()) == run.result


def test_benefits_minus_ten(run, oracle):
    r = apply_scenario(run.inputs, ScenarioSpec("b", benefit_multiplier=0.9))
    assert float(r.npv) == pytest.approx(oracle["fixture"]["scenario_benefits_0_9"], abs=1e-9)
    assert round(r.bcr, 2) == Decimal("1.27")


def test_costs_plus_ten(run, oracle):
    r = apply_scenario(run.inputs, ScenarioSpec("c", cost_multiplier=1.1))
    assert float(r.npv) == pytest.approx(oracle["fixture"]["scenario_costs_1_1"], abs=1e-9)
    assert abs(r.npv - Decimal("269.0")) <= Decimal("0.2")
    assert round(r.bcr, 2) == Decimal("1.28")


def test_discount_override_replaces_rate(run, oracle):
    r = apply_scenario(run.inputs, ScenarioSpec("d", discount_override=0.03))
    assert r.rate == 0.03
    assert float(r.npv) == pytest.approx(oracle["rediscount"]["0.03"], rel=1e-9)


def test_stream_multiplier_only_touches_stream(run):
    r = apply_scenario(run.inputs, ScenarioSpec("s", stream_multipliers={"AEC": 2.0}))
    aec = run.inputs.column_pv("AEC")
    assert r.npv - run.result.npv == aec


@pytest.mark.parametrize("kw", [{"benefit_multiplier": 0.0}, {"cost_multiplier": -1.0}, {"stream_multipliers": {"ROD": 0}}])
def test_non_positive_multiplier(kw):
    with pytest.raises(NonPositiveMultiplier):
        ScenarioSpec("bad", **kw)


@given(st.floats(0.05, 20), st.floats(0.05, 20))
def test_inverse_recovers_base(run, b, c):
    s = ScenarioSpec("x", benefit_multiplier=b, cost_multiplier=c, stream_multipliers={"CO2": b})
    from odp_cba.scenarios import scenario_inputs
    from odp_cba.appraisal import appraise

    back = appraise(scenario_inputs(scenario_inputs(run.inputs, s), s.inverse()))
    assert abs(back.npv - run.result.npv) <= Decimal("1e-6")


# ---- tornado


def test_tornado_ordering_and_ranges(run, oracle):
    entries = tornado(run.inputs, default_impact_matrix())
    order = [e.parameter for e in entries]
    core = [p for p in order if p in ("ai_accuracy", "adoption_rate", "capex", "opex", "discount_rate")]
    assert core == ["ai_accuracy", "adoption_rate", "capex", "opex", "discount_rate"]
    got = {e.parameter: float(e.range) for e in entries}
    f = oracle["fixture"]
    assert got["ai_accuracy"] == pytest.approx(f["tornado_ai"], rel=1e-12)
    assert got["adoption_rate"] == pytest.approx(f["tornado_adoption"], rel=1e-12)
    assert got["capex"] == pytest.approx(f["tornado_capex"], rel=1e-12)
    assert got["opex"] == pytest.approx(f["tornado_opex"], rel=1e-12)
    assert got["discount_rate"] == pytest.approx(13.0, abs=0.05)


def test_tornado_sorted_descending(run):
    ranges = [e.range for e in tornado(run.inputs, default_impact_matrix())]
    assert ranges == sorted(ranges, reverse=True)
    assert all(r >= 0 for r in ranges)


def test_zero_slope_row_has_no_range(run):
    m = ImpactMatrix(PARAMETERS, COLUMNS, {})
    assert all(e.range == 0 for e in tornado(run.inputs, m))


def test_tie_break_by_name(run):
    m = ImpactMatrix(PARAMETERS, COLUMNS, {})
    names = [e.parameter for e in tornado(run.inputs, m)]
    assert names == sorted(DEFAULT_TORNADO_RANGES)


def test_one_way_independence(run):
    m = default_impact_matrix()
    a = {e.parameter: e for e in tornado(run.inputs, m)}
    wider = dict(DEFAULT_TORNADO_RANGES, capex=(-0.5, 0.5), opex=(-0.3, 0.2))
    b = {e.parameter: e for e in tornado(run.inputs, m, wider)}
    for p in ("ai_accuracy", "adoption_rate", "electricity_price", "data_availability", "discount_rate"):
        assert a[p] == b[p]


def test_range_validation(run):
    with pytest.raises(CbaError):
        tornado(run.inputs, default_impact_matrix(), {"capex": (0.1, 0.1)})


def test_discount_sweep_monotone(run, oracle):
    sweep = discount_sweep(run.inputs, [0.03, 0.04, 0.05, 0.06, 0.07])
    npvs = [v for _, v in sweep]
    assert all(a > b for a, b in zip(npvs, npvs[1:]))
    assert float(npvs[0] - npvs[-1]) == pytest.approx(oracle["rediscount"]["0.03"] - oracle["rediscount"]["0.07"], rel=1e-9)


def test_rate_slope_calibration(run):
    assert calibrate_rate_slope(run.inputs) == pytest.approx(DEFAULT_RATE_SLOPE, abs=5e-4)


def test_matrix_dict_round_trip():
    m = default_impact_matrix()
    assert ImpactMatrix.from_dict(m.to_dict()) == m


def test_matrix_rejects_unknown_cell():
    with pytest.raises(CbaError):
        ImpactMatrix(PARAMETERS, COLUMNS, {("nope", "ROD"): 1.0})


@settings(max_examples=50)
@given(st.sampled_from(PARAMETERS), st.floats(-0.5, 0.5))
def test_multipliers_never_negative(p, d):
    assert all(v >= 0 for v in default_impact_matrix().multipliers({p: d * 10}).values())
