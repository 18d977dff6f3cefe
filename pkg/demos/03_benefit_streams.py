"""Formula path for the eight benefit streams.

1. Fit composite driver exponents to the fixture trajectories (these are the
   shipped defaults).
2. Calibrate the GSMS unit bridge to the first-year fixture value.
3. Compare first-year formula values with the fixture row and show the
   flexibility ledger per country.
"""

from odp_cba.benefits import DEFAULT_DRIVERS, STREAMS, calibrate_unit_bridge
from odp_cba.fixtures import fixture_stream_table
from odp_cba.pipeline import Run
from odp_cba.projections import build_driver, fit_driver_weights


def main() -> None:
    run = Run()
    agg = run.projections.aggregate()
    fleet = build_driver("fleet", agg, "ALL").series.values
    res = build_driver("res", agg, "ALL").series.values
    raw = fixture_stream_table(run.fixtures, reconcile=False)

    print("driver exponents fitted to fixture trajectories (shipped defaults)")
    for s in STREAMS:
        w = fit_driver_weights([float(v) for v in raw.series(s).values], fleet, res)
        shipped = DEFAULT_DRIVERS[s][1]
        print(f"  {s:8s} fleet {w['fleet']:.3f} res {w['res']:.3f}   shipped {shipped}")

    ub = calibrate_unit_bridge(run.model, run.generated_projections, run.params, target=23.3)
    print(f"\nGSMS unit bridge for a 23.3 M€ first year: {ub:.4e} (shipped {run.params.unit_bridge:.4e})")

    formula = run.formula_benefits[0]
    y0 = run.model.axis.first_year
    print(f"\nfirst-year values, formula vs fixture (M€, {y0})")
    for s in STREAMS:
        print(f"  {s:8s} {float(formula.series(s)[y0]):8.2f} {float(raw.series(s)[y0]):8.2f}")

    print("\nflexibility ledger (MWh)")
    for c, entry in run.formula_benefits[1].items():
        led = entry["ledger"]
        alloc = ", ".join(f"{k} {float(v):,.0f}" for k, v in led.as_dict().items())
        print(f"  {c}: budget {float(led.budget):,.0f}; {alloc}; residual {float(led.residual):,.0f}")


if __name__ == "__main__":
    main()
