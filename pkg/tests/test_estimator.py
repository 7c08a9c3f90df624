import numpy as np
import pytest

import pulsesde as ps
from conftest import desk_fishery, linear_unit_scenario


def _estimate(mean, std_err, n=1000):
    half = ps.estimator.Z_95 * std_err
    return ps.MeanEstimate(mean=mean, std_err=std_err, n=n,
                           ci_low=mean - half, ci_high=mean + half)


# ---------------------------------------------------------------------------
# MeanEstimate
# ---------------------------------------------------------------------------

def test_mean_estimate_from_samples():
    est = ps.MeanEstimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]))
    assert est.mean == 2.5
    assert est.n == 4
    expected_se = np.std([1, 2, 3, 4], ddof=1) / 2.0
    assert est.std_err == pytest.approx(expected_se, rel=1e-12)
    assert est.ci_low <= est.mean <= est.ci_high


def test_mean_estimate_degenerate_cases():
    single = ps.MeanEstimate.from_samples(np.array([2.0]))
    assert (single.std_err, single.ci_low, single.ci_high) == (0.0, 2.0, 2.0)
    equal = ps.MeanEstimate.from_samples(np.full(10, 3.25))
    assert equal.std_err == 0.0
    with pytest.raises(ps.ParameterError):
        ps.MeanEstimate.from_samples(np.array([]))


# ---------------------------------------------------------------------------
# estimate_pulse_expectations
# ---------------------------------------------------------------------------

def test_deterministic_scenario_zero_width_intervals():
    scn = linear_unit_scenario(sigma=0.0, t_max=10.0, max_pulses=3, seed=1)
    report = ps.estimate_pulse_expectations(scn, ps.GridConfig(1e-3, 10.0), 20)
    for est in report.delta:
        assert est.std_err == 0.0
        assert est.ci_low == est.mean == est.ci_high
        assert est.mean == pytest.approx(1.0, abs=5e-3)
    assert report.censored_paths == 0


def test_linear_oracle_mean_small_ensemble():
    # Scaled-down version of the exact-oracle check: E[tau] = 2.
    scn = linear_unit_scenario(sigma=1.0, t_max=80.0, max_pulses=1, seed=7)
    report = ps.estimate_pulse_expectations(scn, ps.GridConfig(2e-3, 80.0), 1500)
    est = report.delta[0]
    assert abs(est.mean - 2.0) <= max(3 * est.std_err, 0.1) + 0.06


def test_estimates_deterministic_across_workers():
    scn = desk_fishery(seed=23, max_pulses=3, t_max=10.0)
    grid = ps.GridConfig(1e-3, 10.0)
    a = ps.estimate_pulse_expectations(scn, grid, 60, n_workers=1)
    b = ps.estimate_pulse_expectations(scn, grid, 60, n_workers=3)
    assert a == b


def test_estimate_requires_two_paths():
    scn = desk_fishery()
    with pytest.raises(ps.ParameterError):
        ps.estimate_pulse_expectations(scn, ps.GridConfig(1e-3, 10.0), 1)


def test_estimation_error_when_no_pulses():
    # Horizon far too short for any crossing at sigma=0.
    scn = linear_unit_scenario(sigma=0.0, t_max=0.05, max_pulses=1, seed=1)
    with pytest.raises(ps.EstimationError):
        ps.estimate_pulse_expectations(scn, ps.GridConfig(1e-3, 0.05), 10)


def test_censoring_marks_unreliable_indices():
    scn = desk_fishery(seed=3, max_pulses=5, t_max=1.0)
    report = ps.estimate_pulse_expectations(scn, ps.GridConfig(1e-3, 1.0), 200)
    assert report.censored_paths > 0
    assert any(report.unreliable)
    k_bad = report.unreliable.index(True)
    assert report.censored_fraction[k_bad] > ps.estimator.UNRELIABLE_CENSOR_FRACTION


def test_telescoping_of_report_means():
    # Over a censoring-free run the published means telescope exactly.
    scn = desk_fishery(seed=23, max_pulses=4, t_max=15.0)
    report = ps.estimate_pulse_expectations(scn, ps.GridConfig(1e-3, 15.0), 250)
    assert report.censored_paths == 0
    for k in range(1, report.max_k):
        lhs = report.tau[k].mean
        rhs = report.tau[k - 1].mean + report.delta[k].mean
        assert lhs == pytest.approx(rhs, rel=1e-12)


# ---------------------------------------------------------------------------
# Series classification
# ---------------------------------------------------------------------------

def test_classify_decreasing():
    series = [_estimate(1.0, 0.01), _estimate(0.7, 0.01), _estimate(0.5, 0.01),
              _estimate(0.4, 0.01)]
    report = ps.classify_timeout_series(series)
    assert report.classification == "decreasing"


def test_classify_increasing():
    series = [_estimate(0.4, 0.01), _estimate(0.5, 0.01), _estimate(0.65, 0.01)]
    assert ps.classify_timeout_series(series).classification == "increasing"


def test_classify_flat():
    series = [_estimate(0.50, 0.01), _estimate(0.51, 0.01), _estimate(0.495, 0.01),
              _estimate(0.505, 0.01)]
    assert ps.classify_timeout_series(series).classification == "flat"


def test_classify_inconclusive_zigzag():
    series = [_estimate(0.5, 0.001), _estimate(0.9, 0.001), _estimate(0.3, 0.001),
              _estimate(0.8, 0.001)]
    assert ps.classify_timeout_series(series).classification == "inconclusive"


def test_classify_short_series_inconclusive():
    series = [_estimate(1.0, 0.01), _estimate(0.5, 0.01)]
    assert ps.classify_timeout_series(series).classification == "inconclusive"


def test_classify_deterministic_zero_se_series():
    flat = [_estimate(1.0, 0.0)] * 4
    assert ps.classify_timeout_series(flat).classification == "flat"
    falling = [_estimate(1.0 - 0.1 * k, 0.0) for k in range(4)]
    assert ps.classify_timeout_series(falling).classification == "decreasing"


def test_tail_mean_window():
    series = [_estimate(float(k), 0.01) for k in range(8)]  # window max(2, 8//4) = 2
    report = ps.classify_timeout_series(series)
    assert report.tail_window == 2
    assert report.tail_mean == pytest.approx((6.0 + 7.0) / 2)


def test_tail_interval_flag():
    interval = ps.AsymptoticInterval(lower=0.3, upper=0.6, q_limit=40.0, s_limit=50.0)
    inside = [_estimate(0.5, 0.01)] * 4
    report = ps.classify_timeout_series(inside, interval)
    assert report.tail_within_interval is True
    outside = [_estimate(0.9, 0.01)] * 4
    assert ps.classify_timeout_series(outside, interval).tail_within_interval is False


# ---------------------------------------------------------------------------
# Sandwich verdict
# ---------------------------------------------------------------------------

def test_sandwich_desk_inside():
    scn = desk_fishery(seed=101, max_pulses=1, t_max=10.0)
    verdict = ps.sandwich_check(scn, ps.GridConfig(1e-3, 10.0), 800)
    assert verdict.verdict == "inside"
    assert verdict.margin_se > 0
    assert not verdict.advisory
    assert verdict.bounds.lower == pytest.approx(0.255021201501954, rel=1e-12)
    assert verdict.bounds.upper == pytest.approx(0.595049470171226, rel=1e-12)


def test_sandwich_flags_misspecified_sector():
    # Tighten alpha toward beta: both bounds drop below the true mean, so
    # the verdict must read "above".
    import dataclasses
    scn = desk_fishery(seed=101, max_pulses=1, t_max=10.0)
    wrong = dataclasses.replace(
        scn, sector=ps.SectorBounds(alpha=0.98, beta=1.0, s_cap=50.0))
    verdict = ps.sandwich_check(wrong, ps.GridConfig(1e-3, 10.0), 400)
    assert verdict.verdict == "above"
    assert verdict.margin_se > 0


def test_sandwich_advisory_for_moving_trigger():
    drift = ps.LogisticDrift(1.0, 100.0)
    scn = ps.Scenario(
        drift=drift, sector=ps.derive_sector_bounds(drift, 50.0),
        curves=ps.ControlCurves(q=ps.ConstantCurve(40.0),
                                s=ps.TableCurve((0.0, 20.0), (45.0, 50.0))),
        sigma=0.5, t_max=10.0, max_pulses=1, master_seed=11)
    verdict = ps.sandwich_check(scn, ps.GridConfig(1e-3, 10.0), 300)
    assert verdict.advisory


def test_sandwich_collapsed_for_linear_drift():
    scn = linear_unit_scenario(sigma=1.0, t_max=60.0, max_pulses=1, seed=3)
    verdict = ps.sandwich_check(scn, ps.GridConfig(2e-3, 60.0), 1200)
    # widened beta keeps the bracket a hair wide; both ends sit at 2.0
    assert verdict.bounds.lower == pytest.approx(2.0, rel=1e-8)
    assert verdict.bounds.upper == pytest.approx(2.0, rel=1e-8)
    # detection bias pushes the estimate a little above the collapsed bracket
    assert verdict.verdict in ("inside", "above")
    assert verdict.estimate.mean == pytest.approx(2.0, abs=0.15)


# ---------------------------------------------------------------------------
# Decay probe
# ---------------------------------------------------------------------------

def test_decay_probe_reports_decay_when_margin_badly_violated():
    import dataclasses
    scn = dataclasses.replace(desk_fishery(seed=31, t_max=6.0), sigma=3.0)
    probe = ps.decay_probe(scn, ps.GridConfig(1e-3, 6.0), n_probe=256)
    assert probe[0] == (0.0, 40.0)
    assert probe[-1][1] < probe[0][1]
    assert probe[-1][1] < 1.0


def test_decay_probe_checkpoint_count():
    scn = desk_fishery(seed=31, t_max=4.0)
    probe = ps.decay_probe(scn, ps.GridConfig(1e-2, 4.0), n_probe=16, checkpoints=5)
    assert len(probe) == 5
    assert probe[0][0] == 0.0
    assert probe[-1][0] == pytest.approx(4.0, rel=1e-12)
