import pytest

import pulsesde as ps
from conftest import desk_fishery

DESK_TEXT = """\
sigma = 0.5
s_cap = 50.0
t_max = 10.0
max_pulses = 4
seed = 777

[drift]
kind = "logistic"
r = 1.0
k = 100.0

[curves.q]
kind = "constant"
level = 40.0

[curves.s]
kind = "constant"
level = 50.0
"""


def test_parse_desk_scenario():
    scn = ps.parse_scenario_text(DESK_TEXT)
    assert isinstance(scn.drift, ps.LogisticDrift)
    assert scn.sector.alpha == 0.5
    assert scn.sector.beta == 1.0
    assert scn.x0 == 40.0
    assert scn.t_max == 10.0
    assert scn.max_pulses == 4
    assert scn.master_seed == 777
    assert ps.validate_hypotheses(scn).ok


@pytest.mark.parametrize("scn", [
    desk_fishery(),
    ps.make_closure_fishery(1.0, 100.0, 50.0, 0.5, 1.0, 0.5,
                            t_max=20.0, max_pulses=4, seed=3),
    ps.Scenario(
        drift=ps.LinearDrift(1.5),
        sector=ps.derive_sector_bounds(ps.LinearDrift(1.5), 8.0),
        curves=ps.ControlCurves(q=ps.TableCurve((0.0, 5.0), (2.0, 1.5)),
                                s=ps.TableCurve((0.0, 5.0), (6.0, 7.0))),
        sigma=0.4, t_max=12.0, max_pulses=6, master_seed=99),
    ps.Scenario(
        drift=ps.PolynomialDrift((1.0, 0.05)),
        sector=ps.derive_sector_bounds(ps.PolynomialDrift((1.0, 0.05)), 4.0),
        curves=ps.ControlCurves(q=ps.ConstantCurve(1.0), s=ps.ConstantCurve(4.0)),
        sigma=0.3, t_max=9.0, max_pulses=2, master_seed=12),
])
def test_round_trip(scn):
    text = ps.scenario_to_text(scn)
    back = ps.parse_scenario_text(text)
    assert back.drift == scn.drift
    assert back.curves == scn.curves
    assert back.sigma == scn.sigma
    assert back.t_max == scn.t_max
    assert back.max_pulses == scn.max_pulses
    assert back.master_seed == scn.master_seed
    assert back.sector.alpha == scn.sector.alpha
    assert back.sector.beta == scn.sector.beta


def test_save_and_load(tmp_path):
    scn = desk_fishery()
    path = tmp_path / "desk.toml"
    ps.save_scenario(scn, path)
    back = ps.load_scenario(path)
    assert back.curves == scn.curves
    assert back.master_seed == scn.master_seed


def test_exact_field_names_in_output():
    text = ps.scenario_to_text(desk_fishery())
    for token in ("sigma =", "s_cap =", "t_max =", "max_pulses =", "seed =",
                  "[drift]", 'kind = "logistic"', "r = ", "k = ",
                  "[curves.q]", "[curves.s]", "level = "):
        assert token in text
    closure = ps.make_closure_fishery(1.0, 100.0, 50.0, 0.5, 1.0, 0.5,
                                      t_max=20.0, max_pulses=4, seed=3)
    text = ps.scenario_to_text(closure)
    for token in ('kind = "closure_approach"', "gamma = ", "t_scale = "):
        assert token in text


def test_parse_error_reports_location():
    with pytest.raises(ps.ScenarioFileError) as err:
        ps.parse_scenario_text("sigma = oops\nt_max = 1.0\n")
    assert "line 1" in str(err.value)


@pytest.mark.parametrize("mutation,fragment", [
    ("missing_sigma", "sigma"),
    ("unknown_key", "unknown"),
    ("bad_kind", "drift.kind"),
    ("bad_type", "max_pulses"),
])
def test_schema_errors(mutation, fragment):
    text = DESK_TEXT
    if mutation == "missing_sigma":
        text = text.replace("sigma = 0.5\n", "")
    elif mutation == "unknown_key":
        text = text.replace("sigma = 0.5", "sigma = 0.5\nbogus = 1")
    elif mutation == "bad_kind":
        text = text.replace('kind = "logistic"', 'kind = "quadratic"')
    elif mutation == "bad_type":
        text = text.replace("max_pulses = 4", 'max_pulses = "four"')
    with pytest.raises(ps.ScenarioFileError) as err:
        ps.parse_scenario_text(text)
    assert fragment in str(err.value)


def test_value_errors_are_not_schema_errors():
    # A parsable file with gamma outside ]0,1[ is a parameter problem, not a
    # parse problem.
    text = DESK_TEXT.replace(
        '[curves.q]\nkind = "constant"\nlevel = 40.0',
        '[curves.q]\nkind = "closure_approach"\nlevel = 40.0\ngamma = 1.0\nt_scale = 1.0')
    with pytest.raises(ps.ParameterError):
        ps.parse_scenario_text(text)


def test_missing_file():
    with pytest.raises(ps.ScenarioFileError):
        ps.load_scenario("/nonexistent/scenario.toml")


def test_polynomial_coefficients_field():
    text = """\
sigma = 0.3
s_cap = 4.0
t_max = 9.0
max_pulses = 2
seed = 12

[drift]
kind = "polynomial"
coefficients = [1.0, 0.05]

[curves.q]
kind = "constant"
level = 1.0

[curves.s]
kind = "constant"
level = 4.0
"""
    scn = ps.parse_scenario_text(text)
    assert isinstance(scn.drift, ps.PolynomialDrift)
    assert scn.drift.coefficients == (1.0, 0.05)
