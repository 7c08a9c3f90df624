import math

import numpy as np
import pytest

import pulsesde as ps
from conftest import desk_fishery, linear_unit_scenario


def _deterministic_linear(max_pulses=5, t_max=10.0):
    """sigma = 0 linear unit case: every timeout is exactly log(e)/1 = 1."""
    return linear_unit_scenario(sigma=0.0, t_max=t_max, max_pulses=max_pulses, seed=0)


# ---------------------------------------------------------------------------
# run_impulsive_path
# ---------------------------------------------------------------------------

def test_deterministic_pulse_train():
    scn = _deterministic_linear()
    out = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 10.0), 0)
    assert len(out.pulses) == 5
    assert out.censor_time is None
    for k, pulse in enumerate(out.pulses, start=1):
        assert pulse.k == k
        assert pulse.delta == pytest.approx(1.0, abs=5e-3)
        assert pulse.reset_value == 1.0


def test_deterministic_logistic_pulse_train():
    # sigma = 0: the logistic flow from q to s crosses at the closed-form
    # time log(s*(K-q) / (q*(K-s))) / r, here log(1.5).
    drift = ps.LogisticDrift(1.0, 100.0)
    scn = ps.Scenario(
        drift=drift, sector=ps.derive_sector_bounds(drift, 50.0),
        curves=ps.ControlCurves(q=ps.ConstantCurve(40.0), s=ps.ConstantCurve(50.0)),
        sigma=0.0, t_max=5.0, max_pulses=4, master_seed=0)
    expected = math.log((50.0 * 60.0) / (40.0 * 50.0))
    out = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 5.0), 0, record=False)
    assert len(out.pulses) == 4
    for pulse in out.pulses:
        assert pulse.delta == pytest.approx(expected, abs=5e-3)


def test_single_pulse_budget():
    scn = _deterministic_linear(max_pulses=1)
    out = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 10.0), 0)
    assert len(out.pulses) == 1
    assert out.censor_time is None


def test_censoring_at_horizon():
    scn = _deterministic_linear(max_pulses=5, t_max=2.5)
    out = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 2.5), 0)
    assert len(out.pulses) == 2   # pulses near t=1 and t=2, then the horizon
    assert out.censor_time == 2.5


def test_closure_resets_increase_toward_trigger():
    scn = ps.make_closure_fishery(1.0, 100.0, 50.0, 0.5, 1.0, 0.5,
                                  t_max=30.0, max_pulses=6, seed=17)
    out = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 30.0), 0)
    resets = [p.reset_value for p in out.pulses]
    assert len(resets) >= 3
    assert all(b > a for a, b in zip(resets, resets[1:]))
    assert all(r < 50.0 for r in resets)


def test_pulse_times_strictly_increase_and_resets_exact():
    scn = desk_fishery(seed=42)
    grid = ps.GridConfig(1e-3, 15.0)
    for idx in range(8):
        out = ps.run_impulsive_path(scn, grid, idx, record=False)
        taus = [p.tau for p in out.pulses]
        assert all(b > a for a, b in zip(taus, taus[1:]))
        for p in out.pulses:
            assert p.reset_value == float(scn.curves.q.value(p.tau))
            assert p.delta > 0


def test_path_agrees_with_single_segment_engine():
    # The first pulse of the impulsive kernel must equal, bit for bit, the
    # crossing found by the standalone segment engine on the same substream.
    scn = desk_fishery(seed=42)
    grid = ps.GridConfig(1e-3, 15.0)
    for idx in (0, 3, 11):
        out = ps.run_impulsive_path(scn, grid, idx, record=False)
        event, _, _ = ps.run_to_crossing(0.0, scn.x0, scn.curves, scn.drift,
                                         scn.sigma, grid,
                                         ps.NoiseStream(scn.master_seed, idx))
        assert out.pulses[0].tau == event.t_cross


def test_segments_consume_disjoint_increments_in_order():
    # Rebuild the recorded node series from the raw substream: node j+1 must
    # come from node j and increment j, across resets, which pins down that
    # segment k+1 consumes exactly the increments after segment k's.
    scn = desk_fishery(seed=8, max_pulses=3)
    grid = ps.GridConfig(1e-3, 15.0)
    out = ps.run_impulsive_path(scn, grid, 0)
    rec = out.recorded
    n_steps = rec.times.size - 1
    z = ps.NoiseStream(scn.master_seed, 0).take(n_steps)
    sqrt_dt = math.sqrt(grid.dt)
    reset_nodes = {}
    node = 0
    for seg, pulse in zip(out.segments, out.pulses):
        node += seg.times.size - 1  # segment samples: nodes + crossing sample
        reset_nodes[node] = pulse.reset_value
    for j in range(n_steps):
        if j + 1 in reset_nodes:
            expected = reset_nodes[j + 1]
        else:
            expected = ps.paths.em_next(rec.values[j], scn.drift, scn.sigma,
                                        grid.dt, z[j] * sqrt_dt)
            expected = max(expected, 0.0)
        assert rec.values[j + 1] == expected


def test_recorded_trajectory_and_coupled_columns():
    scn = desk_fishery(seed=9, max_pulses=3)
    out = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 15.0), 0)
    rec = out.recorded
    assert rec is not None
    assert rec.times.size == rec.values.size == rec.lower.size == rec.upper.size
    clampfree = np.all(rec.lower > 0)
    if clampfree:
        tol = 1e-12 * np.maximum(1.0, np.abs(rec.values))
        assert np.all(rec.lower <= rec.values + tol)
        assert np.all(rec.values <= rec.upper + tol)


# ---------------------------------------------------------------------------
# Ensemble determinism
# ---------------------------------------------------------------------------

def test_ensemble_matches_single_path_runs():
    scn = desk_fishery(seed=5, max_pulses=3)
    grid = ps.GridConfig(1e-3, 10.0)
    ensemble = ps.run_ensemble(scn, grid, 6)
    for idx, out in enumerate(ensemble):
        single = ps.run_impulsive_path(scn, grid, idx, record=False)
        assert out.pulses == single.pulses
        assert out.censor_time == single.censor_time
        assert out.clamp_events == single.clamp_events


def test_ensemble_worker_count_is_invisible():
    scn = desk_fishery(seed=5, max_pulses=3)
    grid = ps.GridConfig(1e-3, 10.0)
    one = ps.run_ensemble(scn, grid, 40, n_workers=1)
    four = ps.run_ensemble(scn, grid, 40, n_workers=4)
    assert [o.pulses for o in one] == [o.pulses for o in four]
    assert [o.censor_time for o in one] == [o.censor_time for o in four]


def test_ensemble_rejects_bad_args():
    scn = desk_fishery()
    grid = ps.GridConfig(1e-3, 10.0)
    with pytest.raises(ps.ParameterError):
        ps.run_ensemble(scn, grid, 0)
    with pytest.raises(ps.ParameterError):
        ps.run_ensemble(scn, grid, 4, record_indices=[9])


def test_clamped_paths_are_censored():
    # Enormous noise on a linear drift: some paths clamp to zero and can
    # never cross, so they end censored at the horizon.
    drift = ps.LinearDrift(1.0)
    sector = ps.derive_sector_bounds(drift, 10.0)
    scn = ps.Scenario(drift=drift, sector=sector,
                      curves=ps.ControlCurves(q=ps.ConstantCurve(1.0),
                                              s=ps.ConstantCurve(10.0)),
                      sigma=6.0, t_max=2.0, max_pulses=1, master_seed=77)
    outs = ps.run_ensemble(scn, ps.GridConfig(1e-2, 2.0), 200)
    clamped = [o for o in outs if o.clamp_events > 0]
    assert clamped, "expected at least one clamp event at this noise level"
    for out in clamped:
        assert not out.pulses
        assert out.censor_time == 2.0


# ---------------------------------------------------------------------------
# Global solution lookup
# ---------------------------------------------------------------------------

def test_lookup_segment_semantics():
    scn = desk_fishery(seed=42, max_pulses=3)
    out = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 15.0), 0)
    tau1 = out.pulses[0].tau
    # the pulse instant belongs to the first segment: the crossing sample
    assert ps.global_solution_lookup(out, tau1) == float(scn.curves.s.value(tau1))
    # just past the pulse: the second segment near the reset value
    just_after = math.nextafter(tau1, math.inf)
    assert ps.global_solution_lookup(out, just_after) == out.pulses[0].reset_value
    # mid-segment-1 lookups return segment-1 samples
    mid = tau1 / 2
    val = ps.global_solution_lookup(out, mid)
    seg1 = out.segments[0]
    assert val in seg1.values


def test_lookup_range_errors():
    scn = desk_fishery(seed=42, max_pulses=2)
    out = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 15.0), 0)
    with pytest.raises(ps.RangeError):
        ps.global_solution_lookup(out, 0.0)
    with pytest.raises(ps.RangeError):
        ps.global_solution_lookup(out, 1e9)
    bare = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 15.0), 0, record=False)
    with pytest.raises(ps.ParameterError):
        ps.global_solution_lookup(bare, 0.1)


def test_segments_tile_the_horizon():
    scn = desk_fishery(seed=4, max_pulses=4)
    out = ps.run_impulsive_path(scn, ps.GridConfig(1e-3, 15.0), 2)
    segs = out.segments
    assert segs[0].start_tau == 0.0
    for a, b in zip(segs, segs[1:]):
        assert b.start_tau == a.end_tau
    for seg, pulse in zip(segs, out.pulses):
        assert seg.end_tau == pulse.tau
        assert seg.times[-1] == pulse.tau


# ---------------------------------------------------------------------------
# Recurrence identity
# ---------------------------------------------------------------------------

def test_recurrence_residuals_telescoping():
    scn = desk_fishery(seed=13)
    outs = ps.run_ensemble(scn, ps.GridConfig(1e-3, 15.0), 300)
    for res in ps.recurrence_check(outs):
        assert res.residual is not None
        assert abs(res.residual) <= 1e-12 * max(1.0, res.tau_mean)


def test_recurrence_single_path_exact_zero():
    scn = _deterministic_linear(max_pulses=3)
    outs = ps.run_ensemble(scn, ps.GridConfig(1e-3, 10.0), 1)
    for res in ps.recurrence_check(outs):
        assert res.residual == 0.0
        assert not res.subset_changed


def test_recurrence_flags_censoring_subset_change():
    # Short horizon: some paths finish fewer pulses, so later subsets shrink.
    scn = desk_fishery(seed=3, max_pulses=5, t_max=1.2)
    outs = ps.run_ensemble(scn, ps.GridConfig(1e-3, 1.2), 200)
    residuals = ps.recurrence_check(outs)
    ns = [r.n for r in residuals]
    assert any(r.subset_changed for r in residuals)
    assert all(b <= a for a, b in zip(ns, ns[1:]))
    for res in residuals:  # same-subset residuals stay telescoping-exact
        assert abs(res.residual) <= 1e-12 * max(1.0, res.tau_mean)


# ---------------------------------------------------------------------------
# Pulse ledger
# ---------------------------------------------------------------------------

def test_pulse_ledger_round_trip(tmp_path):
    scn = desk_fishery(seed=3, max_pulses=2, t_max=1.2)
    outs = ps.run_ensemble(scn, ps.GridConfig(1e-3, 1.2), 50)
    ledger = tmp_path / "pulses.tsv"
    ps.write_pulse_ledger(outs, ledger)
    lines = ledger.read_text().splitlines()
    assert lines[0].split("\t") == list(ps.impulse.LEDGER_COLUMNS)
    n_pulses = sum(len(o.pulses) for o in outs)
    n_censored = sum(1 for o in outs if o.censor_time is not None)
    assert len(lines) == 1 + n_pulses + n_censored
    for line in lines[1:]:
        fields = line.split("\t")
        assert len(fields) == 6
        assert fields[5] in ("0", "1")
    # byte-determinism on rerun
    again = tmp_path / "pulses2.tsv"
    ps.write_pulse_ledger(outs, again)
    assert again.read_bytes() == ledger.read_bytes()
