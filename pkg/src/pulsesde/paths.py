"""Euler-Maruyama integration, crossing detection, and coupled bound paths.

The integrator is an explicit Euler-Maruyama scheme on a fixed grid.  A
crossing of the upper curve is detected at the first grid node with
X >= s(t) and located inside the step by linear interpolation of X - s
between the bracketing nodes; no Brownian-bridge correction is applied, so
detected crossings carry a small upward bias that the statistical
tolerances must absorb.

Noise is organised as one substream per path, keyed by (master_seed,
path_index) through the counter-based Philox generator: any path can be
regenerated in isolation and the increment sequence does not depend on how
draws are batched, which is what makes ensemble results independent of the
worker layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import ControlCurves, DriftSpec, SectorBounds

_MASK64 = (1 << 64) - 1

#: Standard-normal draws are taken from each stream in blocks of this size.
NOISE_BLOCK = 256


@dataclass(frozen=True)
class GridConfig:
    """Fixed integration grid: step dt up to (at least) horizon t_max."""

    dt: float
    t_max: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if self.dt > self.t_max:
            raise ParameterError(f"dt={self.dt} must not exceed t_max={self.t_max}")

    @property
    def steps(self) -> int:
        # Small backoff so t_max/dt landing a hair above an integer does not
        # add a spurious step.
        return max(1, int(math.ceil(self.t_max / self.dt - 1e-9)))

    @property
    def horizon(self) -> float:
        return self.steps * self.dt


class NoiseStream:
    """Per-path stream of standard-normal increments.

    Identical (master_seed, path_index) pairs reproduce the identical
    sequence regardless of how ``take`` calls are batched; the cursor counts
    the draws consumed so far.
    """

    def __init__(self, master_seed: int, path_index: int):
        if path_index < 0:
            raise ParameterError(f"path_index must be >= 0, got {path_index}")
        key = np.array([master_seed & _MASK64, path_index & _MASK64], dtype=np.uint64)
        self.master_seed = master_seed
        self.path_index = path_index
        self.cursor = 0
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def take(self, n: int) -> np.ndarray:
        """Return the next n standard-normal draws."""
        if n < 0:
            raise ParameterError(f"cannot take {n} draws")
        self.cursor += n
        return self._gen.standard_normal(n)


@dataclass(frozen=True)
class CrossingEvent:
    """A detected hit of the upper curve.

    ``grid_index`` is the first node at or past the crossing (counted from
    the start of the march); ``t_cross`` is the linearly interpolated hit
    time inside the bracketing step and ``x_at_cross`` equals s(t_cross) by
    construction.  A censored event means the horizon arrived first; its
    t_cross and x_at_cross are NaN.
    """

    grid_index: int
    t_cross: float
    x_at_cross: float
    censored: bool


def em_next(x, drift: DriftSpec, sigma: float, dt: float, db):
    """One raw Euler-Maruyama update, x + f(x)*dt + sigma*x*db, unclamped.

    Shared by every engine in the package so that scalar and vectorised
    paths produce bit-identical values.
    """
    return x + drift.value(x) * dt + sigma * x * db


def em_step(x, t, drift: DriftSpec, sigma: float, dt: float, db):
    """One Euler-Maruyama step, clamped at zero from below.

    ``db`` is the Brownian increment over the step (already scaled by
    sqrt(dt)).  The origin is absorbing for every supported drift, so a
    clamped value stays at zero from then on.  ``t`` is accepted for
    signature symmetry; the supported drifts are time-homogeneous.
    """
    del t
    if np.any(np.asarray(x) < 0):
        raise ParameterError("state must be >= 0")
    return np.maximum(em_next(x, drift, sigma, dt, db), 0.0)


def interpolate_crossing(t0: float, g0: float, t1: float, g1: float) -> float:
    """Linear-interpolation root of the gap g = X - s between two nodes.

    Expects g0 < 0 <= g1; a nonnegative g0 (an immediate re-cross after a
    reset, possible only for pathologically steep curves) collapses to t1.
    """
    if g0 >= 0.0:
        return t1
    return min(t1, t0 + (t1 - t0) * (-g0) / (g1 - g0))


def run_to_crossing(start_t: float, start_x: float, curves: ControlCurves,
                    drift: DriftSpec, sigma: float, grid: GridConfig,
                    noise: NoiseStream):
    """March a single segment until it first hits the upper curve.

    Returns ``(event, times, values)`` where times/values sample the path at
    the grid nodes from start_t onward.  The march stops at the first node
    with X >= s(t) or at the grid horizon (censored).  Noise is consumed in
    blocks, so the stream cursor may advance past the crossing.
    """
    s_prev = float(curves.s.value(start_t))
    if not 0 < start_x < s_prev:
        raise ParameterError(
            f"start_x={start_x} must lie strictly between 0 and s(start_t)={s_prev}"
        )
    dt = grid.dt
    sqrt_dt = math.sqrt(dt)
    n_steps = max(0, int(math.ceil((grid.t_max - start_t) / dt - 1e-9)))
    times = [float(start_t)]
    values = [float(start_x)]
    x = float(start_x)
    idx = 0
    while idx < n_steps:
        block = noise.take(min(NOISE_BLOCK, n_steps - idx))
        for z in block:
            t0 = start_t + idx * dt
            t1 = start_t + (idx + 1) * dt
            x1 = em_next(x, drift, sigma, dt, z * sqrt_dt)
            if x1 < 0.0:
                x1 = 0.0
            s1 = float(curves.s.value(t1))
            idx += 1
            times.append(t1)
            values.append(x1)
            if x1 >= s1:
                t_cross = interpolate_crossing(t0, x - s_prev, t1, x1 - s1)
                event = CrossingEvent(
                    grid_index=idx,
                    t_cross=t_cross,
                    x_at_cross=float(curves.s.value(t_cross)),
                    censored=False,
                )
                return event, np.array(times), np.array(values)
            x = x1
            s_prev = s1
    event = CrossingEvent(grid_index=idx, t_cross=math.nan, x_at_cross=math.nan,
                          censored=True)
    return event, np.array(times), np.array(values)


@dataclass(frozen=True, eq=False)
class CoupledTriple:
    """Three paths driven by one increment sequence.

    ``lower`` and ``upper`` integrate the linear drifts alpha*x and beta*x;
    ``center`` integrates the full drift.  All three share every Brownian
    increment, which is what makes the pathwise ordering observable sample
    by sample.  ``capped`` is True when the march stopped because a path
    reached the sector cap (the final node is included); clamp events are
    counted across all three components.
    """

    times: np.ndarray
    lower: np.ndarray
    center: np.ndarray
    upper: np.ndarray
    clamp_events: int
    capped: bool


def run_coupled_triple(start_x: float, sector: SectorBounds, drift: DriftSpec,
                       sigma: float, grid: GridConfig,
                       noise: NoiseStream) -> CoupledTriple:
    """Advance (lower, center, upper) with the same noise until the cap.

    Stops at the first node where any component reaches sector.s_cap (that
    node is kept) or at the grid horizon.
    """
    if not 0 < start_x < sector.s_cap:
        raise ParameterError(
            f"start_x={start_x} must lie strictly between 0 and s_cap={sector.s_cap}"
        )
    dt = grid.dt
    sqrt_dt = math.sqrt(dt)
    alpha = sector.alpha
    beta = sector.beta
    cap = sector.s_cap
    n_steps = grid.steps
    times = [0.0]
    xa_list = [float(start_x)]
    xc_list = [float(start_x)]
    xb_list = [float(start_x)]
    xa = xc = xb = float(start_x)
    clamps = 0
    capped = False
    idx = 0
    while idx < n_steps and not capped:
        block = noise.take(min(NOISE_BLOCK, n_steps - idx))
        for z in block:
            db = z * sqrt_dt
            na = xa + alpha * xa * dt + sigma * xa * db
            nc = em_next(xc, drift, sigma, dt, db)
            nb = xb + beta * xb * dt + sigma * xb * db
            if na < 0.0:
                na = 0.0
                clamps += 1
            if nc < 0.0:
                nc = 0.0
                clamps += 1
            if nb < 0.0:
                nb = 0.0
                clamps += 1
            idx += 1
            times.append(idx * dt)
            xa_list.append(na)
            xc_list.append(nc)
            xb_list.append(nb)
            xa, xc, xb = na, nc, nb
            if na >= cap or nc >= cap or nb >= cap:
                capped = True
                break
    return CoupledTriple(
        times=np.array(times),
        lower=np.array(xa_list),
        center=np.array(xc_list),
        upper=np.array(xb_list),
        clamp_events=clamps,
        capped=capped,
    )
