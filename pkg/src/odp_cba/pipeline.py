"""Compose the stages for one configured run.

:class:`Run` builds each stage lazily and caches it, so CLI subcommands
only pay for what they print.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Optional

from .appraisal import AppraisalInputs, AppraisalResult, DiscountSpec, appraise
from .benefits import BenefitParams, StreamTable, benefits_table
from .config import RunConfig, load_config
from .costs import (
    CapexPlan,
    CostSchedule,
    OpexPlan,
    allocate_costs_by_country,
    calibrate_unit_costs,
    capex_schedule,
    opex_schedule,
)
from .fixtures import (
    FixtureCheck,
    FixturePack,
    check_fixtures,
    country_shares,
    fixture_capex_plan,
    fixture_costs,
    fixture_opex_plan,
    fixture_projections,
    fixture_stream_table,
    load_fixtures,
)
from .model import AssumptionModel, load_assumptions, money
from .montecarlo import (
    Binding,
    Degenerate,
    McConfig,
    McRun,
    Normal,
    Triangular,
    Uniform,
    default_bindings,
    run_trials,
)
from .projections import ProjectionSet, generate_projections
from .scenarios import (
    DEFAULT_TORNADO_RANGES,
    ImpactMatrix,
    ScenarioSpec,
    TornadoEntry,
    apply_scenario,
    default_impact_matrix,
    tornado,
)

log = logging.getLogger(__name__)

__all__ = ["Run", "bindings_from_config", "default_assumptions_path"]


def default_assumptions_path() -> Path:
    return Path(str(resources.files("odp_cba") / "data" / "assumptions.json"))


def bindings_from_config(doc) -> dict[str, Binding]:
    if doc is None:
        return default_bindings()
    out = {}
    for p, b in doc.items():
        kind = b["dist"]
        if kind == "normal":
            dist = Normal(b.get("mean", 0.0), b["sd"])
        elif kind == "uniform":
            dist = Uniform(b["lo"], b["hi"])
        elif kind == "triangular":
            dist = Triangular(b["lo"], b["mode"], b["hi"])
        else:
            dist = Degenerate(b.get("value", 0.0))
        out[p] = Binding(dist, b.get("truncation_sd"))
    return out


class Run:
    """One configured appraisal; every property is a pipeline stage."""

    def __init__(self, config: Optional[RunConfig] = None):
        self.config = load_config() if config is None else config

    # ---- inputs
    @cached_property
    def discount(self) -> DiscountSpec:
        d = self.config["discount"]
        return DiscountSpec(d["rate"], d["base_year"])

    @cached_property
    def model(self) -> AssumptionModel:
        return load_assumptions(self.config.path("assumptions") or default_assumptions_path())

    @cached_property
    def fixtures(self) -> FixturePack:
        return load_fixtures(self.config.path("fixtures"), self.model.axis)

    @cached_property
    def fixture_check(self) -> FixtureCheck:
        return check_fixtures(self.fixtures)

    @cached_property
    def generated_projections(self) -> ProjectionSet:
        return generate_projections(self.model)

    @cached_property
    def projections(self) -> ProjectionSet:
        if self.config.mode == "fixture":
            return fixture_projections(self.fixtures)
        return self.generated_projections

    @cached_property
    def params(self) -> BenefitParams:
        return BenefitParams.from_dict(self.config["benefits"]["params"])

    @cached_property
    def drivers(self):
        from .benefits import DEFAULT_DRIVERS

        out = dict(DEFAULT_DRIVERS)
        for s, d in self.config["benefits"]["drivers"].items():
            out[s] = (d["kind"], {k: d[k] for k in ("fleet", "res") if k in d})
        return out

    # ---- benefits and costs
    @cached_property
    def formula_benefits(self) -> tuple[StreamTable, dict]:
        b = self.config["benefits"]
        return benefits_table(
            self.model,
            self.generated_projections,
            self.params,
            self.drivers,
            ledger=b["ledger"],
            aec_mode=b["aec_mode"],
            roetas_mode=b["roetas_mode"],
        )

    @cached_property
    def benefits(self) -> StreamTable:
        if self.config.mode == "fixture":
            return fixture_stream_table(self.fixtures, self.config["reconcile_streams"])
        return self.formula_benefits[0]

    @cached_property
    def capex_plan(self) -> CapexPlan:
        targets = self.config["costs"]["unit_cost_targets"]
        units = calibrate_unit_costs(self.generated_projections, targets, self.discount.rate)
        return fixture_capex_plan(self.fixtures, units)

    @cached_property
    def opex_plan(self) -> OpexPlan:
        plan = fixture_opex_plan(self.fixtures)
        c = self.config["costs"]
        decay = plan.annual_decay if c["opex_decay"] is None else c["opex_decay"]
        return replace(plan, base_year_total=money(c["opex_base"]), annual_decay=decay)

    @cached_property
    def costs(self) -> CostSchedule:
        if self.config.mode == "fixture":
            return fixture_costs(self.fixtures)
        axis = self.model.axis
        return CostSchedule(
            axis,
            capex_schedule(self.capex_plan, self.generated_projections),
            opex_schedule(self.opex_plan, axis),
            self.capex_plan.one_time_core,
        )

    # ---- appraisal
    @cached_property
    def inputs(self) -> AppraisalInputs:
        src = self.discount.rate if self.config.mode == "fixture" else None
        # fixture tables are present values at the reference rate
        return AppraisalInputs.from_tables(self.benefits, self.costs, self.discount, source_rate=src)

    @cached_property
    def result(self) -> AppraisalResult:
        return appraise(self.inputs)

    @cached_property
    def country_inputs(self) -> dict[str, AppraisalInputs]:
        """Per-country inputs that reassemble exactly into the aggregate."""
        if self.config.mode == "fixture":
            shares = country_shares(self.fixtures)
            table = self.benefits.split(shares["benefits"])
            costs = allocate_costs_by_country(self.costs, shares["costs"])
        else:
            table = self.benefits
            costs = allocate_costs_by_country(self.costs, self.model)
        return {
            c: AppraisalInputs.from_tables(
                table.only(c), costs[c], self.discount, self.inputs.source_rate, label=c
            )
            for c in table.countries
        }

    @cached_property
    def country_results(self) -> dict[str, AppraisalResult]:
        return {c: appraise(x) for c, x in self.country_inputs.items()}

    # ---- sensitivity
    @cached_property
    def scenarios(self) -> list[tuple[ScenarioSpec, AppraisalResult]]:
        specs = [ScenarioSpec.from_dict(s) for s in self.config["scenarios"]]
        return [(s, apply_scenario(self.inputs, s)) for s in specs]

    @cached_property
    def impact_matrix(self) -> ImpactMatrix:
        doc = self.config["impact_matrix"]
        return default_impact_matrix() if doc is None else ImpactMatrix.from_dict(doc)

    @cached_property
    def tornado(self) -> list[TornadoEntry]:
        ranges = dict(DEFAULT_TORNADO_RANGES)
        ranges.update({k: tuple(v) for k, v in self.config["tornado"]["ranges"].items()})
        return tornado(self.inputs, self.impact_matrix, ranges)

    def mc_config(self, country: bool = False) -> McConfig:
        m = self.config["montecarlo"]
        return McConfig(
            n_trials=m["n_trials_country"] if country else m["n_trials"],
            master_seed=m["master_seed"],
            bindings=bindings_from_config(m["bindings"]),
            histogram_bins=m["histogram_bins"],
            workers=m["workers"],
        )

    @cached_property
    def montecarlo(self) -> McRun:
        return run_trials(self.inputs, self.impact_matrix, self.mc_config())

    @cached_property
    def country_montecarlo(self) -> dict[str, McRun]:
        cfg = self.mc_config(country=True)
        return {c: run_trials(x, self.impact_matrix, cfg) for c, x in self.country_inputs.items()}
