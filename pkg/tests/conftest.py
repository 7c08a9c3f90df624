import math

import pytest

import pulsesde as ps


def desk_fishery(t_max=15.0, max_pulses=5, seed=20260808, sigma=0.5):
    """The fixed-quota desk scenario used throughout: r=1, K=100, S=50, C=10."""
    return ps.make_fixed_quota_fishery(
        growth_rate=1.0, capacity=100.0, trigger_level=50.0, quota=10.0,
        sigma=sigma, t_max=t_max, max_pulses=max_pulses, seed=seed)


def linear_unit_scenario(sigma=1.0, t_max=100.0, max_pulses=1, seed=20260808):
    """Linear drift rate 1 from q=1 up to s=e: the exact-oracle case."""
    drift = ps.LinearDrift(1.0)
    sector = ps.derive_sector_bounds(drift, s_cap=math.e)
    return ps.Scenario(
        drift=drift, sector=sector,
        curves=ps.ControlCurves(q=ps.ConstantCurve(1.0), s=ps.ConstantCurve(math.e)),
        sigma=sigma, t_max=t_max, max_pulses=max_pulses, master_seed=seed)


@pytest.fixture
def desk_scenario():
    return desk_fishery()
