"""Cost-benefit appraisal engine for an AI-driven operational digital
platform coordinating EV/ET fleets and renewable generation.

Typical use::

    from odp_cba import Run
    run = Run()                 # packaged configuration, fixture mode
    run.result.npv, run.result.bcr
"""

from .appraisal import AppraisalInputs, AppraisalResult, DiscountSpec, appraise, discount_series
from .benefits import STREAMS, BenefitParams, StreamTable, allocate_flexibility, benefits_table
from .config import RunConfig, load_config
from .costs import CapexPlan, CostSchedule, OpexPlan, allocate_costs_by_country
from .fixtures import check_fixtures, load_fixtures
from .model import AssumptionModel, CbaError, TimeAxis, YearSeries, load_assumptions, money
from .montecarlo import McConfig, McSummary, run_trials, summarize
from .pipeline import Run
from .projections import ProjectionSet, generate_projections
from .report import build_bundle, emit_report
from .scenarios import ImpactMatrix, ScenarioSpec, apply_scenario, default_impact_matrix, tornado

__version__ = "0.1.0"

__all__ = [
    "AppraisalInputs", "AppraisalResult", "DiscountSpec", "appraise", "discount_series",
    "STREAMS", "BenefitParams", "StreamTable", "allocate_flexibility", "benefits_table",
    "RunConfig", "load_config", "CapexPlan", "CostSchedule", "OpexPlan", "allocate_costs_by_country",
    "check_fixtures", "load_fixtures", "AssumptionModel", "CbaError", "TimeAxis", "YearSeries",
    "load_assumptions", "money", "McConfig", "McSummary", "run_trials", "summarize", "Run",
    "ProjectionSet", "generate_projections", "build_bundle", "emit_report", "ImpactMatrix",
    "ScenarioSpec", "apply_scenario", "default_impact_matrix", "tornado",
]
