"""Impulsive system simulation: diffusion segments chained by resets.

Each path marches on the shared global grid.  When the state first reaches
the upper curve at a grid node, the hit time is located by linear
interpolation inside the step, a pulse is recorded there, and the reset
value q(hit time) takes effect at that node; the march then continues with
fresh increments from the same per-path substream.  A path stops at its
pulse budget or at the horizon, whichever comes first.

Paths are completely independent: each one owns its state and its noise
substream, so an ensemble can be split across workers in any way without
changing a single bit of the results.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import HypothesisError, ParameterError, RangeError
from .model import Scenario
from .paths import GridConfig, NoiseStream, interpolate_crossing

#: Steps advanced per noise block inside the marching kernel.
_BLOCK_STEPS = 256

#: Column order of the pulse ledger.
LEDGER_COLUMNS = ("path_id", "k", "tau_k", "delta_tau_k", "reset_value", "censored")


@dataclass(frozen=True)
class PulseRecord:
    """One pulse: index, hit time, timeout since the previous pulse, reset."""

    k: int
    tau: float
    delta: float
    reset_value: float


@dataclass(frozen=True, eq=False)
class SegmentSamples:
    """Node samples of one inter-pulse segment.

    The samples run from the node carrying the segment's reset value through
    the interpolated crossing point (tau_k, s(tau_k)); a trailing censored
    segment has end_tau None and simply ends at the last simulated node.
    """

    k: int
    start_tau: float
    end_tau: Optional[float]
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class RecordedTrajectory:
    """Full node series of a path plus its coupled linear-rate companions.

    ``lower`` and ``upper`` integrate the sector rates alpha and beta with
    the same increments as the path itself and restart with it on every
    reset, so the sandwich is visible segment by segment.
    """

    times: np.ndarray
    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass(eq=False)
class PathOutcome:
    """Everything one impulsive path produced."""

    path_index: int
    pulses: list[PulseRecord]
    censor_time: Optional[float]
    clamp_events: int
    segments: Optional[list[SegmentSamples]] = None
    recorded: Optional[RecordedTrajectory] = None


class _Recorder:
    """Accumulates the node series and coupled companions of one path."""

    def __init__(self, x0: float, alpha: float, beta: float, sigma: float, dt: float):
        self.times = [0.0]
        self.values = [x0]
        self.lower = [x0]
        self.upper = [x0]
        self.marks: list[tuple[int, float, float]] = []
        self._xa = x0
        self._xb = x0
        self._alpha = alpha
        self._beta = beta
        self._sigma = sigma
        self._dt = dt

    def step(self, t1: float, x_new: float, db: float,
             crossing: Optional[tuple[float, float]]):
        dt = self._dt
        sigma = self._sigma
        xa = self._xa + self._alpha * self._xa * dt + sigma * self._xa * db
        xb = self._xb + self._beta * self._xb * dt + sigma * self._xb * db
        if xa < 0.0:
            xa = 0.0
        if xb < 0.0:
            xb = 0.0
        if crossing is not None:
            t_cross, q_val = crossing
            self.marks.append((len(self.times), t_cross, q_val))
            xa = q_val
            xb = q_val
        self.times.append(t1)
        self.values.append(x_new)
        self.lower.append(xa)
        self.upper.append(xb)
        self._xa = xa
        self._xb = xb


def _build_segments(recorder: _Recorder, pulses: list[PulseRecord],
                    s_curve) -> list[SegmentSamples]:
    times = recorder.times
    values = recorder.values
    segments = []
    start_idx = 0
    start_tau = 0.0
    for pulse, (node_idx, t_cross, _q_val) in zip(pulses, recorder.marks):
        seg_t = times[start_idx:node_idx] + [t_cross]
        seg_v = values[start_idx:node_idx] + [float(s_curve.value(t_cross))]
        segments.append(SegmentSamples(
            k=pulse.k, start_tau=start_tau, end_tau=pulse.tau,
            times=np.array(seg_t), values=np.array(seg_v),
        ))
        start_idx = node_idx
        start_tau = pulse.tau
    if start_idx < len(times):
        segments.append(SegmentSamples(
            k=len(pulses) + 1, start_tau=start_tau, end_tau=None,
            times=np.array(times[start_idx:]), values=np.array(values[start_idx:]),
        ))
    return segments


def _drive_paths(scn: Scenario, grid: GridConfig, lo: int, hi: int,
                 record_indices: frozenset = frozenset()) -> list[PathOutcome]:
    """March paths lo..hi-1 of the ensemble keyed by the scenario seed."""
    n = hi - lo
    if n <= 0:
        return []
    dt = grid.dt
    steps = grid.steps
    sqrt_dt = math.sqrt(dt)
    drift = scn.drift
    sigma = scn.sigma
    q_curve = scn.curves.q
    s_curve = scn.curves.s
    max_pulses = scn.max_pulses

    node_t = np.arange(steps + 1) * dt
    s_grid = np.asarray(s_curve.value(node_t), dtype=float)
    x0 = scn.x0
    if not 0.0 < x0 < float(s_grid[0]):
        raise HypothesisError(
            f"start value q(0)={x0} must lie strictly between 0 and s(0)={float(s_grid[0])}"
        )

    streams = [NoiseStream(scn.master_seed, i) for i in range(lo, hi)]
    x = np.full(n, float(x0))
    last_tau = np.zeros(n)
    n_pulses = np.zeros(n, dtype=np.int64)
    clamps = np.zeros(n, dtype=np.int64)
    finished = np.zeros(n, dtype=bool)
    pulse_store: list[list[PulseRecord]] = [[] for _ in range(n)]
    recorders: dict[int, _Recorder] = {}
    for g in record_indices:
        if lo <= g < hi:
            recorders[g - lo] = _Recorder(float(x0), scn.sector.alpha,
                                          scn.sector.beta, sigma, dt)

    alive = np.arange(n)
    j = 0
    while j < steps and alive.size:
        b = min(_BLOCK_STEPS, steps - j)
        z = np.empty((alive.size, b))
        for row, li in enumerate(alive):
            z[row] = streams[int(li)].take(b)
        zt = np.ascontiguousarray(z.T)

        xa = x[alive].copy()
        lt = last_tau[alive].copy()
        npul = n_pulses[alive].copy()
        cl = clamps[alive].copy()
        marching = ~finished[alive]
        rec_pos = {int(li): pos for pos, li in enumerate(alive) if int(li) in recorders}

        for bi in range(b):
            t0 = float(node_t[j + bi])
            t1 = float(node_t[j + bi + 1])
            s0 = float(s_grid[j + bi])
            s1 = float(s_grid[j + bi + 1])
            db = zt[bi] * sqrt_dt
            raw = xa + drift.value(xa) * dt + sigma * xa * db
            neg = raw < 0.0
            if neg.any():
                neg &= marching
                cl += neg
                np.maximum(raw, 0.0, out=raw)
            active_before = marching.copy() if rec_pos else None
            crossed = (raw >= s1) & marching
            cross_info: dict[int, tuple[float, float]] = {}
            if crossed.any():
                for ci in np.nonzero(crossed)[0]:
                    ci = int(ci)
                    t_cross = interpolate_crossing(
                        t0, float(xa[ci]) - s0, t1, float(raw[ci]) - s1)
                    q_val = float(q_curve.value(t_cross))
                    k = int(npul[ci]) + 1
                    delta = t_cross - float(lt[ci])
                    pulse_store[int(alive[ci])].append(
                        PulseRecord(k=k, tau=t_cross, delta=delta, reset_value=q_val))
                    raw[ci] = q_val
                    lt[ci] = t_cross
                    npul[ci] = k
                    cross_info[ci] = (t_cross, q_val)
                    if k >= max_pulses:
                        marching[ci] = False
            if rec_pos:
                for g_local, pos in rec_pos.items():
                    if active_before[pos]:
                        recorders[g_local].step(
                            t1, float(raw[pos]), float(db[pos]), cross_info.get(pos))
            xa = raw

        x[alive] = xa
        last_tau[alive] = lt
        n_pulses[alive] = npul
        clamps[alive] = cl
        finished[alive] = ~marching
        alive = alive[marching]
        j += b

    outcomes = []
    for li in range(n):
        censor = None if finished[li] else grid.t_max
        out = PathOutcome(
            path_index=lo + li,
            pulses=pulse_store[li],
            censor_time=censor,
            clamp_events=int(clamps[li]),
        )
        rec = recorders.get(li)
        if rec is not None:
            out.recorded = RecordedTrajectory(
                times=np.array(rec.times),
                values=np.array(rec.values),
                lower=np.array(rec.lower),
                upper=np.array(rec.upper),
            )
            out.segments = _build_segments(rec, pulse_store[li], s_curve)
        outcomes.append(out)
    return outcomes


def _drive_chunk(args):
    scn, grid, lo, hi, rec = args
    return _drive_paths(scn, grid, lo, hi, rec)


def run_impulsive_path(scn: Scenario, grid: GridConfig, path_index: int,
                       record: bool = True) -> PathOutcome:
    """Simulate one impulsive path of the ensemble keyed by the scenario seed.

    With ``record`` the outcome carries per-segment node samples (for
    lookups and plotting) and the coupled linear-rate companion series.
    """
    rec = frozenset({path_index}) if record else frozenset()
    return _drive_paths(scn, grid, path_index, path_index + 1, rec)[0]


def run_ensemble(scn: Scenario, grid: GridConfig, n_paths: int, n_workers: int = 1,
                 record_indices: Iterable[int] = ()) -> list[PathOutcome]:
    """Simulate paths 0..n_paths-1, optionally across worker processes.

    Results are assembled in path-index order and are bit-identical for any
    worker count, because every path is a pure function of (scenario, grid,
    path index).
    """
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    rec = frozenset(int(i) for i in record_indices)
    for i in rec:
        if not 0 <= i < n_paths:
            raise ParameterError(f"record index {i} outside [0, {n_paths})")
    if n_workers <= 1 or n_paths == 1:
        return _drive_paths(scn, grid, 0, n_paths, rec)
    n_chunks = min(n_workers, n_paths)
    bounds = [(i * n_paths // n_chunks, (i + 1) * n_paths // n_chunks)
              for i in range(n_chunks)]
    args = [(scn, grid, lo, hi, rec) for lo, hi in bounds]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        parts = list(pool.map(_drive_chunk, args))
    return [out for part in parts for out in part]


def global_solution_lookup(outcome: PathOutcome, t: float) -> float:
    """Value of the piecewise solution at time t, nearest node in its segment.

    The segment over ]tau_{k-1}, tau_k] owns its right endpoint: looking up
    exactly tau_k returns the crossing sample s(tau_k), while any t above it
    falls into the next segment, which starts on the reset value.
    """
    if outcome.segments is None:
        raise ParameterError("trajectory samples were not retained for this path")
    if not t > 0:
        raise RangeError(f"t={t} is outside the simulated range (open at 0)")
    last_time = float(outcome.segments[-1].times[-1])
    if t > last_time:
        raise RangeError(f"t={t} is beyond the last simulated time {last_time}")
    for seg in outcome.segments:
        end = seg.end_tau if seg.end_tau is not None else last_time
        if t <= end:
            idx = int(np.argmin(np.abs(seg.times - t)))
            return float(seg.values[idx])
    raise RangeError(f"t={t} not located in any segment")


@dataclass(frozen=True)
class RecurrenceResidual:
    """Telescoping check of mean(tau_k) = mean(tau_{k-1}) + mean(delta_k).

    All three means run over the same subset (paths with at least k pulses),
    so the residual is zero up to floating error whenever the subset is
    nonempty; ``subset_changed`` flags that censoring shrank the subset
    relative to k-1, in which case the published per-k estimates are not
    directly comparable across k.
    """

    k: int
    n: int
    residual: Optional[float]
    tau_mean: Optional[float]
    subset_changed: bool


def recurrence_check(outcomes: list[PathOutcome]) -> list[RecurrenceResidual]:
    """Same-subset recurrence residuals for every pulse index observed."""
    if not outcomes:
        raise ParameterError("need at least one outcome")
    max_k = max(len(o.pulses) for o in outcomes)
    results = []
    prev_n = len(outcomes)
    for k in range(1, max_k + 1):
        subset = [o for o in outcomes if len(o.pulses) >= k]
        n = len(subset)
        if n == 0:
            results.append(RecurrenceResidual(k, 0, None, None, subset_changed=True))
            prev_n = 0
            continue
        tau_k = np.array([o.pulses[k - 1].tau for o in subset])
        delta_k = np.array([o.pulses[k - 1].delta for o in subset])
        if k >= 2:
            tau_prev = np.array([o.pulses[k - 2].tau for o in subset])
        else:
            tau_prev = np.zeros(n)
        residual = float(tau_k.mean() - tau_prev.mean() - delta_k.mean())
        results.append(RecurrenceResidual(
            k, n, residual, float(tau_k.mean()), subset_changed=(n != prev_n)))
        prev_n = n
    return results


def pulse_ledger_lines(outcomes: list[PathOutcome]) -> list[str]:
    """Render outcomes as tab-separated ledger lines, header included.

    One row per pulse; a censored path adds a terminal row for the pulse
    that did not happen, with NaN statistics and censored=1.
    """
    lines = ["\t".join(LEDGER_COLUMNS)]
    for out in sorted(outcomes, key=lambda o: o.path_index):
        for p in out.pulses:
            lines.append(
                f"{out.path_index}\t{p.k}\t{float(p.tau)!r}\t{float(p.delta)!r}"
                f"\t{float(p.reset_value)!r}\t0"
            )
        if out.censor_time is not None:
            lines.append(f"{out.path_index}\t{len(out.pulses) + 1}\tnan\tnan\tnan\t1")
    return lines


def write_pulse_ledger(outcomes: list[PathOutcome], path) -> None:
    Path(path).write_text("\n".join(pulse_ledger_lines(outcomes)) + "\n")
