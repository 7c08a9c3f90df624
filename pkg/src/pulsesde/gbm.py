"""Closed-form geometric-Brownian oracles for hitting-time expectations.

The diffusion with drift pinched in the sector [alpha*x, beta*x] is bounded
pathwise, under common noise, by the two geometric Brownian motions with
rates alpha and beta.  Their level-hitting expectations are explicit, which
gives a sandwich for the expected pulse timeout and, for monotone curves
with finite limits, the interval the timeout expectations converge into.

Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, MarginError, UnsupportedError
from .model import ControlCurves, SectorBounds


@dataclass(frozen=True)
class TauBounds:
    """Bracket for an expected hitting time.

    ``lower`` comes from the fast-growth (beta) comparison path, ``upper``
    from the slow-growth (alpha) one; both collapse to the exact value for a
    linear drift.
    """

    lower: float
    upper: float


@dataclass(frozen=True)
class AsymptoticInterval:
    """Interval the timeout expectations converge into, from curve limits.

    ``q_limit`` and ``s_limit`` are the limits of the reset and trigger
    curves; the interval is [log(s_limit/q_limit)/(beta - sigma^2/2),
    log(s_limit/q_limit)/(alpha - sigma^2/2)].  Equal limits give the
    degenerate interval [0, 0].
    """

    lower: float
    upper: float
    q_limit: float
    s_limit: float


def drift_margin(rate: float, sigma: float) -> float:
    """Exponential growth rate of log X for a geometric path: rate - sigma^2/2."""
    return rate - 0.5 * sigma * sigma


def gbm_value(x0: float, rate: float, sigma: float, t: float, b_t: float) -> float:
    """Evaluate x0 * exp((rate - sigma^2/2) * t + sigma * b_t)."""
    if not x0 > 0:
        raise DomainError(f"x0 must be > 0, got {x0}")
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return x0 * math.exp(drift_margin(rate, sigma) * t + sigma * b_t)


def expected_hit_time(x0: float, level: float, rate: float, sigma: float) -> float:
    """Expected first time a geometric path from x0 reaches ``level``.

    Equals log(level/x0) / (rate - sigma^2/2); finite exactly when the
    margin is positive.  Starting on the level gives 0.
    """
    if not x0 > 0 or not level > 0:
        raise DomainError(f"x0 and level must be > 0, got x0={x0}, level={level}")
    if x0 > level:
        raise DomainError(f"x0={x0} must not exceed level={level}")
    if x0 == level:
        return 0.0
    margin = drift_margin(rate, sigma)
    if margin <= 0:
        raise MarginError(
            f"rate - sigma^2/2 = {margin} is not positive; the expected hit time "
            "is not finite"
        )
    return math.log(level / x0) / margin


def tau_sandwich(x0: float, level: float, sector: SectorBounds, sigma: float) -> TauBounds:
    """Bracket the expected hitting time of ``level`` by the sector rates."""
    if level > sector.s_cap * (1.0 + 1e-12):
        raise DomainError(f"level={level} exceeds the sector cap {sector.s_cap}")
    return TauBounds(
        lower=expected_hit_time(x0, level, sector.beta, sigma),
        upper=expected_hit_time(x0, level, sector.alpha, sigma),
    )


def timeout_bounds_at_k(q_val: float, s_val: float, sector: SectorBounds,
                        sigma: float) -> TauBounds:
    """Bracket one timeout with the curves frozen at their pulse-time values."""
    if not q_val > 0 or not s_val > 0:
        raise DomainError(f"levels must be > 0, got q={q_val}, s={s_val}")
    if q_val > s_val:
        raise DomainError(f"q={q_val} must not exceed s={s_val}")
    return TauBounds(
        lower=expected_hit_time(q_val, s_val, sector.beta, sigma),
        upper=expected_hit_time(q_val, s_val, sector.alpha, sigma),
    )


def asymptotic_interval(curves: ControlCurves, sector: SectorBounds,
                        sigma: float) -> AsymptoticInterval:
    """Convergence interval for the timeout expectations of monotone curves.

    Both curves must have a definite direction (non-monotone tables are
    rejected rather than guessed at).  Equal limits, as in the closure
    fishery, give the degenerate interval [0, 0].
    """
    for name, curve in (("q", curves.q), ("s", curves.s)):
        if curve.direction() is None:
            raise UnsupportedError(
                f"curve {name} is not monotone; the asymptotic interval is undefined"
            )
    q_limit = float(curves.q.limit())
    s_limit = float(curves.s.limit())
    if not 0 < q_limit <= s_limit:
        raise DomainError(
            f"curve limits must satisfy 0 < Q <= S, got Q={q_limit}, S={s_limit}"
        )
    if q_limit == s_limit:
        return AsymptoticInterval(0.0, 0.0, q_limit, s_limit)
    alpha_margin = drift_margin(sector.alpha, sigma)
    if alpha_margin <= 0:
        raise MarginError(
            f"alpha - sigma^2/2 = {alpha_margin} is not positive; the timeout "
            "expectations need not stay finite"
        )
    ratio = math.log(s_limit / q_limit)
    return AsymptoticInterval(
        lower=ratio / drift_margin(sector.beta, sigma),
        upper=ratio / alpha_margin,
        q_limit=q_limit,
        s_limit=s_limit,
    )


def fixed_quota_printed_interval(growth_rate: float, capacity: float,
                                 trigger_level: float, quota: float,
                                 sigma: float) -> tuple[float, float]:
    """Legacy closed-form interval for the fixed-quota fishery.

    The upper endpoint matches the general interval formula at alpha =
    growth_rate * (capacity - trigger_level) / capacity.  The lower endpoint
    divides by (growth_rate - sigma^2)/2 instead of beta - sigma^2/2 =
    growth_rate - sigma^2/2, so it disagrees with the general formula; the
    bounds command prints both so the discrepancy stays visible.
    """
    if not 0 < quota < trigger_level:
        raise DomainError(f"quota must lie in ]0, trigger_level[, got {quota}")
    ratio = math.log(trigger_level / (trigger_level - quota))
    lower_den = growth_rate - sigma * sigma
    upper_den = 2.0 * growth_rate * (capacity - trigger_level) - capacity * sigma * sigma
    if lower_den <= 0 or upper_den <= 0:
        raise MarginError("legacy interval denominators must be positive")
    return 2.0 * ratio / lower_den, 2.0 * capacity * ratio / upper_den
