"""Headline appraisal from the shipped fixture pack.

Loads the default configuration, appraises the reconciled fixture flows and
prints the headline, the per-country split and the cumulative discounted net
position behind both payback conventions.
"""

from odp_cba.pipeline import Run


def main() -> None:
    run = Run()
    r = run.result
    print(f"PV benefits {r.pv_benefits:.1f} M€, PV costs {r.pv_costs:.1f} M€")
    print(f"NPV {r.npv:.1f} M€, BCR {r.bcr:.2f}")
    print(f"payback: end of {r.payback_eoy} (interpolated {r.payback_interp:.2f})")

    print("\ncumulative discounted net (M€)")
    for y, c in zip(run.inputs.axis.years, r.cumulative):
        print(f"  {y}  {c:9.1f}")

    print("\nper country")
    for c, x in run.country_results.items():
        print(f"  {c}: benefits {x.pv_benefits:.1f}, costs {x.pv_costs:.1f}, NPV {x.npv:.1f}, BCR {x.bcr:.3f}")

    chk = run.fixture_check
    print(f"\nfixture anomalies: {[f.code for f in chk.anomalies]}")
    print(f"unacknowledged findings: {len(chk.unacknowledged)}")


if __name__ == "__main__":
    main()
