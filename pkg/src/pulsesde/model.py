"""Drift families, control curves, scenarios, and hypothesis validation.

The model is a scalar diffusion dX = f(X) dt + sigma * X dB run between two
deterministic control curves: the process starts on the lower curve q,
diffuses until it first hits the upper curve s, and is then instantaneously
reset onto q.  Three standing hypotheses make the pulse times well behaved:

(A) the drift is pinched between two linear functions,
    alpha * x <= f(x) <= beta * x on [0, s_cap] with 0 <= alpha <= beta;
(B) the margin alpha - sigma^2/2 is strictly positive;
(C) the curves are ordered, 0 < q(t) < s(t) <= s_cap on the horizon.

Everything in this module is immutable after construction and safe to share
across concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .errors import DomainError, HypothesisError, ParameterError

#: Default number of grid points used by the hypothesis checks.
DEFAULT_GRID_POINTS = 10_001

#: Relative slack for grid inequality checks.  The drift and curve families
#: are smooth; anything beyond a few ulps is a real violation.
CHECK_RTOL = 1e-12

#: Relative widening applied to the upper sector rate of a linear drift so
#: the bookkeeping alpha <= beta stays informative; both bounds describe the
#: same exact-oracle dynamics.
LINEAR_SECTOR_WIDENING = 1e-9


# ---------------------------------------------------------------------------
# Drift families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearDrift:
    """f(x) = rate * x."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError(f"linear drift rate must be > 0, got {self.rate}")

    def value(self, x):
        return self.rate * x


@dataclass(frozen=True)
class LogisticDrift:
    """f(x) = growth_rate * x * (1 - x / capacity)."""

    growth_rate: float
    capacity: float

    def __post_init__(self):
        if not self.growth_rate > 0:
            raise ParameterError(f"growth rate must be > 0, got {self.growth_rate}")
        if not self.capacity > 0:
            raise ParameterError(f"capacity must be > 0, got {self.capacity}")

    def value(self, x):
        return self.growth_rate * x * (1.0 - x / self.capacity)


@dataclass(frozen=True)
class PolynomialDrift:
    """f(x) = c1*x + c2*x**2 + ... + cm*x**m, forced through the origin."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ParameterError("polynomial drift needs at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)

    def value(self, x):
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc * x


DriftSpec = Union[LinearDrift, LogisticDrift, PolynomialDrift]


def evaluate_drift(spec: DriftSpec, x):
    """Evaluate the drift f at a state value (scalar or array).

    States must be nonnegative; the diffusion never leaves [0, inf[.
    """
    if np.any(np.asarray(x) < 0):
        raise DomainError("drift is only defined for nonnegative states")
    return spec.value(x)


# ---------------------------------------------------------------------------
# Control curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantCurve:
    """A flat curve at a fixed level."""

    level: float

    def __post_init__(self):
        if not self.level > 0:
            raise ParameterError(f"curve level must be > 0, got {self.level}")

    def value(self, t):
        if np.ndim(t) == 0:
            return self.level
        return np.full(np.shape(t), self.level)

    def limit(self) -> float:
        return self.level

    def direction(self) -> Optional[str]:
        return "constant"


@dataclass(frozen=True)
class ClosureApproachCurve:
    """level * (1 - gamma ** (1 + t / t_scale)).

    Starts at level * (1 - gamma) and rises strictly toward level; used to
    model a quota that shrinks geometrically with elapsed time.
    """

    level: float
    gamma: float
    t_scale: float

    def __post_init__(self):
        if not self.level > 0:
            raise ParameterError(f"curve level must be > 0, got {self.level}")
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError(f"gamma must lie strictly inside ]0, 1[, got {self.gamma}")
        if not self.t_scale > 0:
            raise ParameterError(f"t_scale must be > 0, got {self.t_scale}")

    def value(self, t):
        return self.level * (1.0 - self.gamma ** (1.0 + t / self.t_scale))

    def limit(self) -> float:
        return self.level

    def direction(self) -> Optional[str]:
        return "increasing"


@dataclass(frozen=True)
class TableCurve:
    """Piecewise-linear interpolation of (time, value) knots.

    Extrapolates as a constant on both sides of the knot range, so the curve
    always has finite limits.  Knot times must be strictly increasing; the
    direction() of a non-monotone table is None and such curves are rejected
    by the asymptotic analytics (the simulator itself does not care).
    """

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(float(v) for v in self.values)
        if len(times) != len(values) or not times:
            raise ParameterError("table curve needs matching, nonempty times and values")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ParameterError("table curve times must be strictly increasing")
        if min(values) <= 0:
            raise ParameterError("table curve values must be > 0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def value(self, t):
        return np.interp(t, self.times, self.values)

    def limit(self) -> float:
        return self.values[-1]

    def direction(self) -> Optional[str]:
        diffs = [b - a for a, b in zip(self.values, self.values[1:])]
        if all(d == 0 for d in diffs):
            return "constant"
        if all(d > 0 for d in diffs):
            return "increasing"
        if all(d < 0 for d in diffs):
            return "decreasing"
        return None


CurveSpec = Union[ConstantCurve, ClosureApproachCurve, TableCurve]


@dataclass(frozen=True)
class ControlCurves:
    """The lower reset curve q and the upper trigger curve s."""

    q: CurveSpec
    s: CurveSpec


# ---------------------------------------------------------------------------
# Sector bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SectorBounds:
    """Linear rates pinching the drift on [0, s_cap], plus the noise margin.

    ``margin`` is alpha - sigma^2/2 and is populated when the bounds are
    attached to a scenario (it needs sigma).  alpha == beta is allowed so the
    exact-oracle linear case stays representable; derived bounds widen beta
    slightly instead.
    """

    alpha: float
    beta: float
    s_cap: float
    margin: Optional[float] = None

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")
        if not self.beta >= self.alpha:
            raise ParameterError(f"beta must be >= alpha, got beta={self.beta} < alpha={self.alpha}")
        if not self.s_cap > 0:
            raise ParameterError(f"s_cap must be > 0, got {self.s_cap}")


def derive_sector_bounds(spec: DriftSpec, s_cap: float,
                         grid_points: int = DEFAULT_GRID_POINTS) -> SectorBounds:
    """Compute sector rates (alpha, beta) for a drift on [0, s_cap].

    Linear drifts give alpha = rate with beta widened by a relative billionth
    so the pair stays ordered.  Logistic drifts use the exact endpoint rates
    alpha = r*(capacity - s_cap)/capacity and beta = r, valid only for
    s_cap < capacity.  Polynomial drifts are bracketed numerically by the
    extreme values of f(x)/x on a grid over ]0, s_cap].
    """
    if not s_cap > 0:
        raise ParameterError(f"s_cap must be > 0, got {s_cap}")
    if isinstance(spec, LinearDrift):
        alpha = spec.rate
        beta = spec.rate * (1.0 + LINEAR_SECTOR_WIDENING)
    elif isinstance(spec, LogisticDrift):
        if s_cap >= spec.capacity:
            raise HypothesisError(
                f"s_cap={s_cap} must lie strictly below the carrying capacity {spec.capacity}"
            )
        alpha = spec.growth_rate * (spec.capacity - s_cap) / spec.capacity
        beta = spec.growth_rate
    elif isinstance(spec, PolynomialDrift):
        xs = np.linspace(0.0, s_cap, grid_points)[1:]
        ratios = spec.value(xs) / xs
        alpha = float(ratios.min())
        beta = float(ratios.max())
        if beta <= alpha:
            beta = alpha * (1.0 + LINEAR_SECTOR_WIDENING)
    else:
        raise ParameterError(f"unknown drift spec {type(spec).__name__}")
    if alpha <= 0:
        raise HypothesisError(
            f"derived alpha={alpha} is not positive; the margin condition cannot hold"
        )
    return SectorBounds(alpha=alpha, beta=beta, s_cap=s_cap)


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """A complete, immutable problem instance.

    The start value is not a free field: every path starts on the lower
    curve, X(0+) = q(0), exactly as each post-pulse segment restarts on q.
    """

    drift: DriftSpec
    sector: SectorBounds
    curves: ControlCurves
    sigma: float
    t_max: float
    max_pulses: int
    master_seed: int

    def __post_init__(self):
        if self.sigma < 0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")
        if not self.t_max > 0:
            raise ParameterError(f"t_max must be > 0, got {self.t_max}")
        if self.max_pulses < 1:
            raise ParameterError(f"max_pulses must be >= 1, got {self.max_pulses}")
        margin = self.sector.alpha - 0.5 * self.sigma * self.sigma
        object.__setattr__(self, "sector", replace(self.sector, margin=margin))

    @property
    def x0(self) -> float:
        """Start value q(0)."""
        return float(self.curves.q.value(0.0))


# ---------------------------------------------------------------------------
# Hypothesis validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisCheck:
    label: str
    passed: bool
    detail: str
    first_violation: Optional[float] = None


@dataclass(frozen=True)
class ValidationReport:
    """Per-hypothesis verdicts with the first violating grid point, if any."""

    sector: HypothesisCheck       # (A)
    margin: HypothesisCheck       # (B)
    curve_order: HypothesisCheck  # (C)
    grid_points: int
    state_pitch: float
    time_pitch: float

    @property
    def ok(self) -> bool:
        return self.sector.passed and self.margin.passed and self.curve_order.passed

    def checks(self) -> tuple[HypothesisCheck, HypothesisCheck, HypothesisCheck]:
        return (self.sector, self.margin, self.curve_order)

    def failed_labels(self) -> list[str]:
        return [c.label for c in self.checks() if not c.passed]


def validate_hypotheses(scn: Scenario, grid_points: int = DEFAULT_GRID_POINTS) -> ValidationReport:
    """Machine-check hypotheses (A), (B), (C) on uniform grids.

    Violations are report entries, never exceptions; the checks are
    deterministic in the inputs.  The grid pitches are reported so callers
    can tighten them if the curve or drift families get less tame.
    """
    if grid_points < 2:
        raise ParameterError(f"grid_points must be >= 2, got {grid_points}")
    sector = scn.sector
    s_cap = sector.s_cap

    # (A): alpha*x <= f(x) <= beta*x sampled on ]0, s_cap].
    xs = np.linspace(0.0, s_cap, grid_points)[1:]
    fx = np.asarray(scn.drift.value(xs), dtype=float)
    tol = CHECK_RTOL * np.maximum(1.0, sector.beta * xs)
    low_bad = fx < sector.alpha * xs - tol
    high_bad = fx > sector.beta * xs + tol
    bad = low_bad | high_bad
    if bad.any():
        x_bad = float(xs[int(np.argmax(bad))])
        sector_check = HypothesisCheck(
            "A", False,
            f"f(x)/x leaves [{sector.alpha}, {sector.beta}] at x={x_bad}",
            first_violation=x_bad,
        )
    else:
        sector_check = HypothesisCheck(
            "A", True,
            f"{sector.alpha}*x <= f(x) <= {sector.beta}*x on ]0, {s_cap}]",
        )

    # (B): alpha > sigma^2/2.
    half_var = 0.5 * scn.sigma * scn.sigma
    if sector.alpha > half_var:
        margin_check = HypothesisCheck(
            "B", True, f"alpha={sector.alpha} > sigma^2/2={half_var}"
        )
    else:
        margin_check = HypothesisCheck(
            "B", False, f"sigma^2/2={half_var} is not < alpha={sector.alpha}"
        )

    # (C): 0 < q(t) < s(t) <= s_cap on [0, t_max].  The cap comparison is
    # non-strict: the trigger curve may sit exactly on the sector cap, which
    # is how the constant-quota scenarios are posed.
    ts = np.linspace(0.0, scn.t_max, grid_points)
    qv = np.asarray(scn.curves.q.value(ts), dtype=float)
    sv = np.asarray(scn.curves.s.value(ts), dtype=float)
    cap_tol = CHECK_RTOL * max(1.0, s_cap)
    bad_c = (qv <= 0.0) | (qv >= sv) | (sv > s_cap + cap_tol)
    if bad_c.any():
        i = int(np.argmax(bad_c))
        t_bad = float(ts[i])
        curve_check = HypothesisCheck(
            "C", False,
            f"curve order 0 < q < s <= {s_cap} fails at t={t_bad} "
            f"(q={float(qv[i])}, s={float(sv[i])})",
            first_violation=t_bad,
        )
    else:
        curve_check = HypothesisCheck(
            "C", True, f"0 < q(t) < s(t) <= {s_cap} on [0, {scn.t_max}]"
        )

    return ValidationReport(
        sector=sector_check,
        margin=margin_check,
        curve_order=curve_check,
        grid_points=grid_points,
        state_pitch=s_cap / (grid_points - 1),
        time_pitch=scn.t_max / (grid_points - 1),
    )


# ---------------------------------------------------------------------------
# Fishery scenario constructors
# ---------------------------------------------------------------------------

def make_fixed_quota_fishery(growth_rate: float, capacity: float, trigger_level: float,
                             quota: float, sigma: float, t_max: float,
                             max_pulses: int, seed: int) -> Scenario:
    """Fishery with a fixed quota: logistic stock growth, pulses at a level.

    Whenever the stock reaches ``trigger_level``, a catch of size ``quota``
    is removed at once, so the stock restarts at trigger_level - quota.  Both
    control curves are constants; validation must pass.
    """
    if not growth_rate > 0:
        raise ParameterError(f"growth_rate must be > 0, got {growth_rate}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if not 0 < quota < trigger_level:
        raise ParameterError(
            f"quota must lie in ]0, trigger_level[; got quota={quota}, "
            f"trigger_level={trigger_level} (the reset level would not be positive)"
        )
    if not trigger_level < capacity:
        raise ParameterError(
            f"trigger_level={trigger_level} must be < capacity={capacity}"
        )
    drift = LogisticDrift(growth_rate=growth_rate, capacity=capacity)
    sector = derive_sector_bounds(drift, s_cap=trigger_level)
    scn = Scenario(
        drift=drift,
        sector=sector,
        curves=ControlCurves(q=ConstantCurve(trigger_level - quota),
                             s=ConstantCurve(trigger_level)),
        sigma=sigma,
        t_max=t_max,
        max_pulses=max_pulses,
        master_seed=seed,
    )
    report = validate_hypotheses(scn)
    if not report.ok:
        raise HypothesisError(
            "fixed-quota fishery fails hypothesis "
            + ", ".join(f"({c.label}): {c.detail}" for c in report.checks() if not c.passed)
        )
    return scn


def make_closure_fishery(growth_rate: float, capacity: float, trigger_level: float,
                         closure_fraction: float, time_scale: float, sigma: float,
                         t_max: float, max_pulses: int, seed: int) -> Scenario:
    """Fishery heading for total closure: the reset curve rises toward the trigger.

    The allowed catch shrinks geometrically with elapsed time, so the reset
    value q(t) = trigger_level * (1 - closure_fraction ** (1 + t/time_scale))
    climbs from trigger_level * (1 - closure_fraction) toward trigger_level
    and the timeouts between pulses shrink toward zero.
    """
    if not 0.0 < closure_fraction < 1.0:
        raise ParameterError(
            f"closure_fraction must lie strictly inside ]0, 1[, got {closure_fraction}"
        )
    if not time_scale > 0:
        raise ParameterError(f"time_scale must be > 0, got {time_scale}")
    if not growth_rate > 0:
        raise ParameterError(f"growth_rate must be > 0, got {growth_rate}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if not 0 < trigger_level < capacity:
        raise ParameterError(
            f"trigger_level must lie in ]0, capacity[; got {trigger_level} vs {capacity}"
        )
    drift = LogisticDrift(growth_rate=growth_rate, capacity=capacity)
    sector = derive_sector_bounds(drift, s_cap=trigger_level)
    scn = Scenario(
        drift=drift,
        sector=sector,
        curves=ControlCurves(
            q=ClosureApproachCurve(level=trigger_level, gamma=closure_fraction,
                                   t_scale=time_scale),
            s=ConstantCurve(trigger_level),
        ),
        sigma=sigma,
        t_max=t_max,
        max_pulses=max_pulses,
        master_seed=seed,
    )
    report = validate_hypotheses(scn)
    if not report.ok:
        raise HypothesisError(
            "closure fishery fails hypothesis "
            + ", ".join(f"({c.label}): {c.detail}" for c in report.checks() if not c.passed)
        )
    return scn
