from __future__ import annotations

import json
from dataclasses import replace
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from odp_cba.model import (
    CagrOutOfRange,
    CostSharesNotUnit,
    EmptyCountrySet,
    NegativeStock,
    TimeAxis,
    ValidationError,
    YearOutOfAxis,
    YearSeries,
    dump_assumptions,
    interpolate_scc,
    load_assumptions,
    money,
    validate_assumptions,
)
from odp_cba.pipeline import default_assumptions_path


@pytest.fixture(scope="module")
def model():
    return load_assumptions(default_assumptions_path())


def test_shipped_assumptions_validate(model):
    assert model.ids == ("AT", "HU", "SI")
    assert sum(model.cost_shares().values()) == Decimal("1.00")


def test_shares_not_unit(model):
    doc = [replace(c, cost_share=s) for c, s in zip(model.countries, (0.5, 0.5, 0.2))]
    with pytest.raises(ValidationError) as exc:
        validate_assumptions(doc)
    assert any(isinstance(v, CostSharesNotUnit) for v in exc.value.violations)


def test_cagr_out_of_range_names_country(model):
    doc = [replace(model.countries[0], ev_cagr=-1.5), *model.countries[1:]]
    with pytest.raises(ValidationError) as exc:
        validate_assumptions(doc)
    (v,) = exc.value.violations
    assert isinstance(v, CagrOutOfRange)
    assert (v.country, v.field) == ("AT", "ev_cagr")


def test_all_violations_reported(model):
    doc = [
        replace(model.countries[0], ev_cagr=-1.5, et_stock_0=-1.0),
        replace(model.countries[1], cost_share=0.9),
        model.countries[2],
    ]
    with pytest.raises(ValidationError) as exc:
        validate_assumptions(doc)
    kinds = {type(v) for v in exc.value.violations}
    assert kinds == {CagrOutOfRange, NegativeStock, CostSharesNotUnit}


def test_empty_country_set():
    with pytest.raises(ValidationError) as exc:
        validate_assumptions([])
    assert isinstance(exc.value.violations[0], EmptyCountrySet)


def test_validation_idempotent(model):
    assert validate_assumptions(model) == model


def test_round_trip(model):
    assert load_assumptions(json.loads(dump_assumptions(model))) == model


def test_scc_endpoints_and_midpoint(model, oracle):
    at = model["AT"]
    assert interpolate_scc(at, 2026) == 85.0
    assert interpolate_scc(at, 2035) == 120.0
    assert interpolate_scc(at, 2030) == pytest.approx(oracle["formulas"]["scc_2030"], abs=1e-12)
    assert round(interpolate_scc(at, 2030), 3) == 100.556


def test_scc_outside_axis(model):
    with pytest.raises(YearOutOfAxis):
        interpolate_scc(model["AT"], 2036)


def test_scc_monotone(model):
    vals = [interpolate_scc(model["HU"], y) for y in model.axis.years]
    assert vals == sorted(vals)


def test_money_is_exact_decimal():
    assert money(0.1) == Decimal("0.1")
    assert money(0.1) + money(0.2) == Decimal("0.3")


def test_year_series_length_checked():
    axis = TimeAxis()
    with pytest.raises(Exception):
        YearSeries(axis, (1.0, 2.0))


@given(st.floats(0, 1000, allow_nan=False), st.floats(0, 1000, allow_nan=False), st.integers(2026, 2035))
def test_scc_between_endpoints(a, b, year):
    lo, hi = sorted((a, b))
    from odp_cba.model import Country, CountryAssumptions

    ca = CountryAssumptions(Country("X"), 1, 0.1, 1, 0.1, 1, 1, 0.2, 100, 10, lo, hi, 1.0)
    v = interpolate_scc(ca, year)
    assert lo - 1e-9 <= v <= hi + 1e-9
