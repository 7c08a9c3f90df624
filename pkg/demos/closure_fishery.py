"""Closure fishery: a rising reset curve drives the timeouts to zero.

Here the allowed catch shrinks geometrically with elapsed time, so the reset
value q(t) = S * (1 - gamma ** (1 + t/T)) climbs toward the trigger level S.
The gap the stock has to regrow keeps narrowing: the timeout expectations
form a decreasing sequence whose limit interval is degenerate at zero.
"""

import pulsesde as ps


def main():
    scn = ps.make_closure_fishery(
        growth_rate=1.0, capacity=100.0, trigger_level=50.0,
        closure_fraction=0.5, time_scale=1.0, sigma=0.5,
        t_max=40.0, max_pulses=10, seed=2026)
    print(f"reset curve starts at q(0) = {scn.x0} and climbs toward "
          f"{scn.curves.q.limit()}")

    grid = ps.GridConfig(dt=1e-3, t_max=40.0)
    one_path = ps.run_impulsive_path(scn, grid, 0)
    print("\none sample path:")
    for p in one_path.pulses:
        print(f"  pulse {p.k}: tau={p.tau:.3f}, timeout={p.delta:.3f}, "
              f"restart at {p.reset_value:.3f}")

    estimates = ps.estimate_pulse_expectations(scn, grid, n_paths=1500)
    print("\nensemble timeout means:")
    for k, est in enumerate(estimates.delta, start=1):
        bar = "#" * max(1, round(40 * est.mean / estimates.delta[0].mean))
        print(f"  k={k:2d}: {est.mean:.4f}  {bar}")

    interval = ps.asymptotic_interval(scn.curves, scn.sector, scn.sigma)
    series = ps.classify_timeout_series(estimates.delta, interval)
    print(f"\nclassification: {series.classification}; "
          f"limit interval [{interval.lower}, {interval.upper}] "
          f"(equal curve limits collapse it to a point at zero)")


if __name__ == "__main__":
    main()
