"""Pathwise sandwich: a sector-bounded diffusion between two geometric paths.

Whenever the drift satisfies alpha*x <= f(x) <= beta*x, the diffusion driven
by a given noise realisation stays between the two geometric paths with
rates alpha and beta driven by the *same* noise.  This script runs coupled
triples for the logistic fishery drift, checks the ordering node by node,
and writes one triple to a TSV for plotting.
"""

from pathlib import Path

import numpy as np

import pulsesde as ps


def main():
    scn = ps.make_fixed_quota_fishery(
        growth_rate=1.0, capacity=100.0, trigger_level=50.0, quota=10.0,
        sigma=0.5, t_max=15.0, max_pulses=5, seed=314)
    grid = ps.GridConfig(dt=1e-3, t_max=15.0)
    print(f"sector: {scn.sector.alpha}*x <= f(x) <= {scn.sector.beta}*x on "
          f"[0, {scn.sector.s_cap}]")

    n_triples = 200
    hit_times = []
    ordered = 0
    for i in range(n_triples):
        tri = ps.run_coupled_triple(scn.x0, scn.sector, scn.drift, scn.sigma,
                                    grid, ps.NoiseStream(scn.master_seed, i))
        tol = 1e-12 * np.maximum(1.0, np.abs(tri.center))
        if np.all(tri.lower <= tri.center + tol) and np.all(tri.center <= tri.upper + tol):
            ordered += 1
        if tri.capped:
            hit_times.append(tri.times[-1])
    print(f"node-wise ordering held on {ordered}/{n_triples} triples")
    print(f"mean cap-hitting time of the triple: {np.mean(hit_times):.4f}")
    bounds = ps.timeout_bounds_at_k(scn.x0, 50.0, scn.sector, scn.sigma)
    print(f"analytic bracket for the diffusion's own hit time: "
          f"[{bounds.lower:.4f}, {bounds.upper:.4f}]")

    out = Path("demo_output")
    out.mkdir(exist_ok=True)
    tri = ps.run_coupled_triple(scn.x0, scn.sector, scn.drift, scn.sigma, grid,
                                ps.NoiseStream(scn.master_seed, 0))
    lines = ["t\tx\tx_alpha\tx_beta"]
    for t, c, lo, hi in zip(tri.times, tri.center, tri.lower, tri.upper):
        lines.append(f"{t!r}\t{c!r}\t{lo!r}\t{hi!r}")
    target = out / "triple.tsv"
    target.write_text("\n".join(lines) + "\n")
    print(f"wrote one coupled triple to {target} ({tri.times.size} nodes)")


if __name__ == "__main__":
    main()
