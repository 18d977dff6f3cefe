"""Scenarios, tornado and the discount-rate calibration.

The tornado's discount-rate row is driven by a rate slope calibrated by
bisection; straight re-discounting over 3-7% is shown next to it.
"""

from odp_cba.pipeline import Run
from odp_cba.scenarios import DEFAULT_RATE_SLOPE, calibrate_rate_slope, discount_sweep


def main() -> None:
    run = Run()
    print("scenarios")
    for s, r in run.scenarios:
        print(f"  {s.name:15s} NPV {r.npv:7.1f}  BCR {r.bcr:.3f}")

    print("\ntornado (widest first)")
    for e in run.tornado:
        print(f"  {e.parameter:18s} [{e.low:+.2f}, {e.high:+.2f}]  {e.npv_low:7.1f} .. {e.npv_high:7.1f}  range {e.range:6.1f}")

    slope = calibrate_rate_slope(run.inputs, target_range=13.0)
    print(f"\nrate slope for a 13 M€ swing: {slope:.4f} (shipped {DEFAULT_RATE_SLOPE})")
    print("straight re-discounting of the fixture flows:")
    for rate, npv in discount_sweep(run.inputs, [0.03, 0.04, 0.05, 0.06, 0.07]):
        print(f"  {rate:.0%}  NPV {npv:7.1f}")


if __name__ == "__main__":
    main()
