"""Scenario files: TOML key/value text mirroring scenario fields one-to-one.

Layout::

    sigma = 0.5
    s_cap = 50.0
    t_max = 20.0
    max_pulses = 8
    seed = 123

    [drift]
    kind = "logistic"      # or "linear" (rate), "polynomial" (coefficients)
    r = 1.0
    k = 100.0

    [curves.q]
    kind = "constant"      # or "closure_approach", "table"
    level = 40.0

    [curves.s]
    kind = "constant"
    level = 50.0

Sector bounds are derived from the drift and s_cap on load, so a file never
stores them.  Parsing and schema problems raise ScenarioFileError; value
constraints (a gamma outside ]0,1[, say) surface as the constructors'
ParameterError or HypothesisError instead.
"""

from __future__ import annotations

from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ScenarioFileError
from .model import (
    ClosureApproachCurve,
    ConstantCurve,
    ControlCurves,
    CurveSpec,
    DriftSpec,
    LinearDrift,
    LogisticDrift,
    PolynomialDrift,
    Scenario,
    TableCurve,
    derive_sector_bounds,
)

_TOP_KEYS = {"sigma", "s_cap", "t_max", "max_pulses", "seed", "drift", "curves"}


def _number(table: dict, key: str, where: str) -> float:
    if key not in table:
        raise ScenarioFileError(f"missing key {where}.{key}")
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioFileError(f"{where}.{key} must be a number, got {v!r}")
    return float(v)


def _integer(table: dict, key: str, where: str) -> int:
    if key not in table:
        raise ScenarioFileError(f"missing key {where}.{key}")
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioFileError(f"{where}.{key} must be an integer, got {v!r}")
    return v


def _check_keys(table: dict, allowed: set, where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ScenarioFileError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _parse_drift(table) -> DriftSpec:
    if not isinstance(table, dict):
        raise ScenarioFileError("drift must be a section")
    kind = table.get("kind")
    if kind == "linear":
        _check_keys(table, {"kind", "rate"}, "drift")
        return LinearDrift(rate=_number(table, "rate", "drift"))
    if kind == "logistic":
        _check_keys(table, {"kind", "r", "k"}, "drift")
        return LogisticDrift(growth_rate=_number(table, "r", "drift"),
                             capacity=_number(table, "k", "drift"))
    if kind == "polynomial":
        _check_keys(table, {"kind", "coefficients"}, "drift")
        coeffs = table.get("coefficients")
        if not isinstance(coeffs, list) or not coeffs or not all(
                isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs):
            raise ScenarioFileError("drift.coefficients must be a nonempty list of numbers")
        return PolynomialDrift(coefficients=tuple(float(c) for c in coeffs))
    raise ScenarioFileError(f"drift.kind must be linear, logistic or polynomial, got {kind!r}")


def _parse_curve(table, where: str) -> CurveSpec:
    if not isinstance(table, dict):
        raise ScenarioFileError(f"{where} must be a section")
    kind = table.get("kind")
    if kind == "constant":
        _check_keys(table, {"kind", "level"}, where)
        return ConstantCurve(level=_number(table, "level", where))
    if kind == "closure_approach":
        _check_keys(table, {"kind", "level", "gamma", "t_scale"}, where)
        return ClosureApproachCurve(
            level=_number(table, "level", where),
            gamma=_number(table, "gamma", where),
            t_scale=_number(table, "t_scale", where),
        )
    if kind == "table":
        _check_keys(table, {"kind", "times", "values"}, where)
        times = table.get("times")
        values = table.get("values")
        for name, seq in (("times", times), ("values", values)):
            if not isinstance(seq, list) or not seq or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in seq):
                raise ScenarioFileError(f"{where}.{name} must be a nonempty list of numbers")
        return TableCurve(times=tuple(float(t) for t in times),
                          values=tuple(float(v) for v in values))
    raise ScenarioFileError(
        f"{where}.kind must be constant, closure_approach or table, got {kind!r}")


def parse_scenario_text(text: str) -> Scenario:
    """Build a Scenario from TOML text; no hypothesis validation is run."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioFileError(f"scenario file does not parse: {exc}") from exc
    _check_keys(data, _TOP_KEYS, "scenario")
    if "drift" not in data:
        raise ScenarioFileError("missing [drift] section")
    if "curves" not in data or not isinstance(data["curves"], dict):
        raise ScenarioFileError("missing [curves.q] / [curves.s] sections")
    _check_keys(data["curves"], {"q", "s"}, "curves")
    if "q" not in data["curves"] or "s" not in data["curves"]:
        raise ScenarioFileError("curves must define both q and s")

    drift = _parse_drift(data["drift"])
    q = _parse_curve(data["curves"]["q"], "curves.q")
    s = _parse_curve(data["curves"]["s"], "curves.s")
    sigma = _number(data, "sigma", "scenario")
    s_cap = _number(data, "s_cap", "scenario")
    t_max = _number(data, "t_max", "scenario")
    max_pulses = _integer(data, "max_pulses", "scenario")
    seed = _integer(data, "seed", "scenario")
    sector = derive_sector_bounds(drift, s_cap)
    return Scenario(
        drift=drift,
        sector=sector,
        curves=ControlCurves(q=q, s=s),
        sigma=sigma,
        t_max=t_max,
        max_pulses=max_pulses,
        master_seed=seed,
    )


def load_scenario(path) -> Scenario:
    """Load a scenario file from disk."""
    try:
        text = Path(path).read_text()
    except FileNotFoundError as exc:
        raise ScenarioFileError(f"scenario file not found: {path}") from exc
    return parse_scenario_text(text)


def _fmt(v) -> str:
    if isinstance(v, bool):
        raise ScenarioFileError(f"cannot serialise {v!r}")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise ScenarioFileError(f"cannot serialise {v!r}")


def _drift_lines(drift: DriftSpec) -> list[str]:
    if isinstance(drift, LinearDrift):
        return ['kind = "linear"', f"rate = {_fmt(drift.rate)}"]
    if isinstance(drift, LogisticDrift):
        return ['kind = "logistic"', f"r = {_fmt(drift.growth_rate)}",
                f"k = {_fmt(drift.capacity)}"]
    if isinstance(drift, PolynomialDrift):
        return ['kind = "polynomial"', f"coefficients = {_fmt(drift.coefficients)}"]
    raise ScenarioFileError(f"cannot serialise drift {type(drift).__name__}")


def _curve_lines(curve: CurveSpec) -> list[str]:
    if isinstance(curve, ConstantCurve):
        return ['kind = "constant"', f"level = {_fmt(curve.level)}"]
    if isinstance(curve, ClosureApproachCurve):
        return ['kind = "closure_approach"', f"level = {_fmt(curve.level)}",
                f"gamma = {_fmt(curve.gamma)}", f"t_scale = {_fmt(curve.t_scale)}"]
    if isinstance(curve, TableCurve):
        return ['kind = "table"', f"times = {_fmt(curve.times)}",
                f"values = {_fmt(curve.values)}"]
    raise ScenarioFileError(f"cannot serialise curve {type(curve).__name__}")


def scenario_to_text(scn: Scenario) -> str:
    """Render a scenario as TOML text that round-trips through the loader."""
    lines = [
        f"sigma = {_fmt(scn.sigma)}",
        f"s_cap = {_fmt(scn.sector.s_cap)}",
        f"t_max = {_fmt(scn.t_max)}",
        f"max_pulses = {_fmt(scn.max_pulses)}",
        f"seed = {_fmt(scn.master_seed)}",
        "",
        "[drift]",
        *_drift_lines(scn.drift),
        "",
        "[curves.q]",
        *_curve_lines(scn.curves.q),
        "",
        "[curves.s]",
        *_curve_lines(scn.curves.s),
    ]
    return "\n".join(lines) + "\n"


def save_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(scenario_to_text(scn))
