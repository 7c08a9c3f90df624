"""Closed-form hitting-time expectations versus Monte Carlo.

A geometric path x0 * exp((rate - sigma^2/2) t + sigma B_t) first reaches a
level L at an expected time log(L/x0) / (rate - sigma^2/2).  This script
evaluates the formula, shows its scale invariance and monotonicity, and then
reproduces the number by simulating the linear-drift diffusion with the
package's Euler-Maruyama engine.
"""

import math
import time

import pulsesde as ps


def main():
    rate, sigma, x0, level = 1.0, 1.0, 1.0, math.e
    analytic = ps.expected_hit_time(x0, level, rate, sigma)
    print(f"analytic E[tau] for rate={rate}, sigma={sigma}, {x0} -> e: {analytic}")
    print(f"scale invariance, 10 -> 10e: "
          f"{ps.expected_hit_time(10 * x0, 10 * level, rate, sigma)}")
    print(f"faster drift (rate 2): {ps.expected_hit_time(x0, level, 2.0, sigma)}")
    print()

    drift = ps.LinearDrift(rate)
    scn = ps.Scenario(
        drift=drift,
        sector=ps.derive_sector_bounds(drift, s_cap=level),
        curves=ps.ControlCurves(q=ps.ConstantCurve(x0), s=ps.ConstantCurve(level)),
        sigma=sigma, t_max=80.0, max_pulses=1, master_seed=2026)

    for n_paths in (500, 2000, 8000):
        t0 = time.monotonic()
        report = ps.estimate_pulse_expectations(scn, ps.GridConfig(1e-3, 80.0), n_paths)
        est = report.delta[0]
        print(f"n={n_paths:5d}: estimate={est.mean:.4f} +- {est.std_err:.4f} "
              f"(CI [{est.ci_low:.4f}, {est.ci_high:.4f}], "
              f"{time.monotonic() - t0:.1f}s)")
    print()
    print("The small upward offset is the crossing-detection bias of the fixed")
    print("grid (order sqrt(dt)); shrink --dt to shrink it.")


if __name__ == "__main__":
    main()
