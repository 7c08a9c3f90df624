"""Ensemble statistics: expectations, monotonicity, and convergence checks.

Estimation is a pure fold over path outcomes in path-index order, so the
numbers are bit-identical however the paths were distributed over workers.
Censored paths contribute to a pulse index only if they completed it; the
censoring fraction per index is reported, and estimates with more than the
configured fraction censored are flagged unreliable rather than patched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EstimationError, ParameterError
from .gbm import AsymptoticInterval, TauBounds, timeout_bounds_at_k
from .impulse import PathOutcome, run_ensemble
from .model import ConstantCurve, Scenario
from .paths import GridConfig, NoiseStream

#: Two-sided 95% normal quantile; intervals use the normal approximation.
Z_95 = 1.959963984540054

#: A pulse index whose censoring fraction exceeds this is flagged unreliable.
UNRELIABLE_CENSOR_FRACTION = 0.05


@dataclass(frozen=True)
class MeanEstimate:
    """Sample mean with standard error and a 95% confidence interval."""

    mean: float
    std_err: float
    n: int
    ci_low: float
    ci_high: float

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "MeanEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n < 1:
            raise ParameterError("cannot estimate a mean from zero samples")
        mean = float(samples.mean())
        if n >= 2 and not np.all(samples == samples[0]):
            std_err = float(samples.std(ddof=1) / math.sqrt(n))
        else:
            # identical samples have sample deviation exactly zero; do not let
            # the accumulator's rounding residue leak into the interval
            std_err = 0.0
        half = Z_95 * std_err
        return cls(mean=mean, std_err=std_err, n=n,
                   ci_low=mean - half, ci_high=mean + half)


@dataclass(frozen=True)
class PulseExpectationReport:
    """Per-pulse-index estimates for tau_k and delta_k, plus censoring."""

    tau: tuple[MeanEstimate, ...]
    delta: tuple[MeanEstimate, ...]
    censored_fraction: tuple[float, ...]
    unreliable: tuple[bool, ...]
    n_paths: int
    censored_paths: int
    clamp_events: int

    @property
    def max_k(self) -> int:
        return len(self.delta)


def summarize_outcomes(outcomes: Sequence[PathOutcome]) -> PulseExpectationReport:
    """Fold path outcomes into per-index statistics (tolerates zero pulses)."""
    if not outcomes:
        raise ParameterError("need at least one outcome")
    n_paths = len(outcomes)
    max_k = max(len(o.pulses) for o in outcomes)
    tau_est = []
    delta_est = []
    censored_fraction = []
    unreliable = []
    for k in range(1, max_k + 1):
        taus = np.array([o.pulses[k - 1].tau for o in outcomes if len(o.pulses) >= k])
        deltas = np.array([o.pulses[k - 1].delta for o in outcomes if len(o.pulses) >= k])
        tau_est.append(MeanEstimate.from_samples(taus))
        delta_est.append(MeanEstimate.from_samples(deltas))
        frac = 1.0 - taus.size / n_paths
        censored_fraction.append(frac)
        unreliable.append(frac > UNRELIABLE_CENSOR_FRACTION)
    return PulseExpectationReport(
        tau=tuple(tau_est),
        delta=tuple(delta_est),
        censored_fraction=tuple(censored_fraction),
        unreliable=tuple(unreliable),
        n_paths=n_paths,
        censored_paths=sum(1 for o in outcomes if o.censor_time is not None),
        clamp_events=sum(o.clamp_events for o in outcomes),
    )


def estimate_pulse_expectations(scn: Scenario, grid: GridConfig, n_paths: int,
                                n_workers: int = 1) -> PulseExpectationReport:
    """Run an ensemble and estimate E[tau_k] and E[delta_k] per pulse index.

    Deterministic in (scenario, grid, n_paths); raises if no path completed
    even the first pulse, which usually means the horizon is too short.
    """
    if n_paths < 2:
        raise ParameterError(f"n_paths must be >= 2, got {n_paths}")
    outcomes = run_ensemble(scn, grid, n_paths, n_workers=n_workers)
    report = summarize_outcomes(outcomes)
    if report.max_k == 0:
        raise EstimationError(
            "no path completed a single pulse; extend the horizon or check the scenario"
        )
    return report


# ---------------------------------------------------------------------------
# Timeout series classification
# ---------------------------------------------------------------------------

CLASSIFICATIONS = ("decreasing", "increasing", "flat", "inconclusive")


@dataclass(frozen=True)
class TimeoutSeriesReport:
    """Monotonicity classification of the delta_k means plus the tail state."""

    delta: tuple[MeanEstimate, ...]
    classification: str
    tail_mean: Optional[float]
    tail_window: int
    interval: Optional[AsymptoticInterval]
    tail_within_interval: Optional[bool]


def _pooled_se(a: MeanEstimate, b: MeanEstimate) -> float:
    return math.sqrt(a.std_err ** 2 + b.std_err ** 2)


def classify_timeout_series(delta_estimates: Sequence[MeanEstimate],
                            interval: Optional[AsymptoticInterval] = None,
                            ) -> TimeoutSeriesReport:
    """Classify the delta_k mean series with a CI-aware decision rule.

    decreasing: every consecutive difference mean_k - mean_{k+1} exceeds
    -2 pooled standard errors AND the total drop mean_1 - mean_m exceeds
    2 pooled standard errors; increasing is the mirror image; flat means
    all pairwise means agree within 3 pooled standard errors; anything else
    (or fewer than three estimates) is inconclusive.  The rules are checked
    in that order.
    """
    est = tuple(delta_estimates)
    m = len(est)
    if m < 3:
        tail = _tail_mean(est)
        return TimeoutSeriesReport(
            delta=est, classification="inconclusive",
            tail_mean=tail[0], tail_window=tail[1],
            interval=interval, tail_within_interval=_tail_flag(tail[0], interval),
        )
    means = [e.mean for e in est]
    diffs = [means[i] - means[i + 1] for i in range(m - 1)]
    step_se = [_pooled_se(est[i], est[i + 1]) for i in range(m - 1)]
    total_se = _pooled_se(est[0], est[-1])

    decreasing = (all(d > -2.0 * se for d, se in zip(diffs, step_se))
                  and (means[0] - means[-1]) > 2.0 * total_se)
    increasing = (all(-d > -2.0 * se for d, se in zip(diffs, step_se))
                  and (means[-1] - means[0]) > 2.0 * total_se)
    flat = all(
        abs(means[i] - means[j]) <= 3.0 * _pooled_se(est[i], est[j])
        for i in range(m) for j in range(i + 1, m)
    )
    if decreasing:
        label = "decreasing"
    elif increasing:
        label = "increasing"
    elif flat:
        label = "flat"
    else:
        label = "inconclusive"
    tail = _tail_mean(est)
    return TimeoutSeriesReport(
        delta=est, classification=label,
        tail_mean=tail[0], tail_window=tail[1],
        interval=interval, tail_within_interval=_tail_flag(tail[0], interval),
    )


def _tail_mean(est: tuple[MeanEstimate, ...]) -> tuple[Optional[float], int]:
    if not est:
        return None, 0
    window = max(2, len(est) // 4)
    window = min(window, len(est))
    return float(np.mean([e.mean for e in est[-window:]])), window


def _tail_flag(tail_mean: Optional[float],
               interval: Optional[AsymptoticInterval]) -> Optional[bool]:
    if tail_mean is None or interval is None:
        return None
    return interval.lower <= tail_mean <= interval.upper


# ---------------------------------------------------------------------------
# Sandwich verdict
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SandwichVerdict:
    """Comparison of the first-timeout mean against its analytic bracket.

    ``margin_se`` measures, in standard-error units, how far inside the
    bracket the mean sits (or how far past the violated endpoint).  The
    verdict is advisory when the trigger curve moves: the frozen-level
    bracket is exact only for a constant trigger level.
    """

    verdict: str  # inside | below | above
    margin_se: float
    bounds: TauBounds
    estimate: MeanEstimate
    advisory: bool


def sandwich_check(scn: Scenario, grid: GridConfig, n_paths: int,
                   n_workers: int = 1,
                   report: Optional[PulseExpectationReport] = None) -> SandwichVerdict:
    """Check the estimated E[delta_1] against the frozen-level bracket.

    Pass a precomputed report to reuse an existing ensemble run.
    """
    if report is None:
        report = estimate_pulse_expectations(scn, grid, n_paths, n_workers=n_workers)
    est = report.delta[0]
    bounds = timeout_bounds_at_k(
        scn.x0, float(scn.curves.s.value(0.0)), scn.sector, scn.sigma)
    se = est.std_err if est.std_err > 0 else math.inf
    if est.mean < bounds.lower:
        verdict = "below"
        margin = (bounds.lower - est.mean) / se
    elif est.mean > bounds.upper:
        verdict = "above"
        margin = (est.mean - bounds.upper) / se
    else:
        verdict = "inside"
        margin = min(est.mean - bounds.lower, bounds.upper - est.mean) / se
    if math.isinf(se):
        margin = math.inf if verdict != "inside" else 0.0
    return SandwichVerdict(
        verdict=verdict,
        margin_se=margin,
        bounds=bounds,
        estimate=est,
        advisory=not isinstance(scn.curves.s, ConstantCurve),
    )


# ---------------------------------------------------------------------------
# Margin-violation diagnostic
# ---------------------------------------------------------------------------

def decay_probe(scn: Scenario, grid: GridConfig, n_probe: int = 256,
                checkpoints: int = 9) -> list[tuple[float, float]]:
    """Ensemble mean of the fast-rate companion path at checkpoint times.

    Evolves the linear-rate-beta geometric companion from q(0) with no
    resets and no cap, one substream per probe path, and reports the sample
    mean at evenly spaced checkpoints.  When sigma^2/2 exceeds beta the
    companion decays pathwise toward zero, which is what this probe makes
    visible for margin-violating scenarios; the output is a report, not an
    assertion.
    """
    if n_probe < 1 or checkpoints < 2:
        raise ParameterError("need n_probe >= 1 and checkpoints >= 2")
    dt = grid.dt
    steps = grid.steps
    sqrt_dt = math.sqrt(dt)
    beta = scn.sector.beta
    sigma = scn.sigma
    x = np.full(n_probe, scn.x0)
    check_nodes = np.unique(np.linspace(0, steps, checkpoints).astype(int))
    series = [(0.0, float(x.mean()))]
    streams = [NoiseStream(scn.master_seed, i) for i in range(n_probe)]
    next_check = 1
    block = 1024
    j = 0
    while j < steps:
        b = min(block, steps - j)
        z = np.empty((n_probe, b))
        for row, stream in enumerate(streams):
            z[row] = stream.take(b)
        for bi in range(b):
            db = z[:, bi] * sqrt_dt
            x = x + beta * x * dt + sigma * x * db
            np.maximum(x, 0.0, out=x)
            j_now = j + bi + 1
            while next_check < check_nodes.size and j_now == int(check_nodes[next_check]):
                series.append((j_now * dt, float(x.mean())))
                next_check += 1
        j += b
    return series
