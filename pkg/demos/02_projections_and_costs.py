"""Generated projections against the fixture tables, and the cost build-up.

Shows where constant-growth projections drift from the tabulated stocks,
how unit costs are calibrated to the hardware subtotals, and the fitted OPEX
decay.
"""

from decimal import Decimal

from odp_cba.appraisal import DiscountSpec, discount_series
from odp_cba.costs import ASSETS, CapexPlan, ai_cost_shares, capex_schedule, fit_opex_decay, opex_schedule
from odp_cba.pipeline import Run


def main() -> None:
    run = Run()
    gen, fix = run.generated_projections, run.projections

    print("largest generated-vs-fixture deviation per series")
    for kind in ("ev_stock", "et_stock", "res_capacity"):
        for c in gen.countries:
            devs = [
                (abs(getattr(gen, kind)[c][y] / float(getattr(fix, kind)[c][y]) - 1), y) for y in gen.axis.years
            ]
            d, y = max(devs)
            print(f"  {kind:13s} {c}: {d:6.2%} in {y}")

    plan = run.capex_plan
    print("\ncalibrated unit costs (€ per new unit)")
    for a in ASSETS:
        only = {k: (plan.unit_costs[k] if k == a else 0.0) for k in ASSETS}
        pv = discount_series(capex_schedule(CapexPlan((), Decimal(0), only), gen), DiscountSpec())
        print(f"  {a:7s} {plan.unit_costs[a]:10.1f}  -> discounted outlay {pv:.2f} M€")
    print(f"one-time core platform: {plan.one_time_core} M€")

    d = fit_opex_decay(37.4, 26.3, 9)
    opex = opex_schedule(run.opex_plan, run.model.axis)
    print(f"\nOPEX decay {d:.6f}/yr, series {[f'{v:.1f}' for v in opex]} sum {opex.total():.2f}")
    print(f"AI-tagged shares: {ai_cost_shares(plan, run.opex_plan)}")


if __name__ == "__main__":
    main()
