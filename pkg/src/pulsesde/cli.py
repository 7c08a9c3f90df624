"""Command line: scenario validation, analytic bounds, and simulation runs.

Exit codes: 0 success, 1 domain failure (hypothesis violation, no pulses),
2 usage or parse error, 3 output I/O error.  Flags override scenario-file
values; the manifest records the effective values of everything that can
influence the run, and is written last so its checksums cover every other
artifact.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DomainError,
    EstimationError,
    HypothesisError,
    MarginError,
    ParameterError,
    PulseSdeError,
    ScenarioFileError,
    UnsupportedError,
)
from .estimator import (
    classify_timeout_series,
    decay_probe,
    sandwich_check,
    summarize_outcomes,
)
from .gbm import (
    asymptotic_interval,
    fixed_quota_printed_interval,
    tau_sandwich,
    timeout_bounds_at_k,
)
from .impulse import recurrence_check, run_ensemble, write_pulse_ledger
from .model import ConstantCurve, LogisticDrift, validate_hypotheses
from .paths import GridConfig
from .scenario_io import load_scenario

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_IO = 3

#: Environment variable holding the default output directory.
OUT_DIR_ENV = "PULSESDE_OUT"

# Scenario files always carry their own horizon, so only the grid step and
# the ensemble size need command-line defaults.
DEFAULT_DT = 1e-3
DEFAULT_PATHS = 10_000


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pulsesde",
        description="Simulate impulsive diffusions between control curves and "
                    "check them against closed-form hitting-time bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check hypotheses (A), (B), (C)")
    p_val.add_argument("scenario", help="scenario file (TOML)")
    p_val.add_argument("--grid-points", type=_positive_int, default=10_001,
                       help="grid resolution for the checks (default 10001)")

    p_bnd = sub.add_parser("bounds", help="print the closed-form expectations and intervals")
    p_bnd.add_argument("scenario", help="scenario file (TOML)")

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo ensemble and write artifacts")
    p_sim.add_argument("scenario", help="scenario file (TOML)")
    p_sim.add_argument("--paths", type=_positive_int, default=DEFAULT_PATHS,
                       help=f"number of Monte Carlo paths (default {DEFAULT_PATHS})")
    p_sim.add_argument("--dt", type=_positive_float, default=DEFAULT_DT,
                       help=f"integration step (default {DEFAULT_DT})")
    p_sim.add_argument("--t-max", type=_positive_float, default=None,
                       help="horizon override (default: scenario value)")
    p_sim.add_argument("--max-pulses", type=_positive_int, default=None,
                       help="pulse budget override (default: scenario value)")
    p_sim.add_argument("--seed", type=int, default=None,
                       help="master seed override (default: scenario value)")
    p_sim.add_argument("--out", default=None,
                       help=f"output directory (default: ${OUT_DIR_ENV} or ./pulsesde_out)")
    p_sim.add_argument("--dump-paths", type=_nonnegative_int, default=0, metavar="M",
                       help="write per-node trajectories for the first M paths")
    p_sim.add_argument("--workers", type=_positive_int, default=1,
                       help="worker processes (results are identical for any count)")
    p_sim.add_argument("--allow-invalid", action="store_true",
                       help="simulate even if hypothesis validation fails (adds a "
                            "decay probe of the fast comparison path to the summary)")
    return parser


def _print_validation(report) -> None:
    for check in report.checks():
        status = "PASS" if check.passed else "FAIL"
        print(f"hypothesis ({check.label}): {status}  {check.detail}")
    print(f"grid.points = {report.grid_points}")
    print(f"grid.state_pitch = {report.state_pitch!r}")
    print(f"grid.time_pitch = {report.time_pitch!r}")
    print(f"result: {'PASS' if report.ok else 'FAIL'}")


def cmd_validate(args) -> int:
    scn = load_scenario(args.scenario)
    report = validate_hypotheses(scn, grid_points=args.grid_points)
    _print_validation(report)
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_bounds(args) -> int:
    scn = load_scenario(args.scenario)
    report = validate_hypotheses(scn)
    if not report.ok:
        _print_validation(report)
        return EXIT_DOMAIN
    x0 = scn.x0
    s0 = float(scn.curves.s.value(0.0))
    sandwich = tau_sandwich(x0, s0, scn.sector, scn.sigma)
    k1 = timeout_bounds_at_k(x0, s0, scn.sector, scn.sigma)
    print(f"x0 = {x0!r}")
    print(f"trigger.initial = {s0!r}")
    print(f"sector.alpha = {scn.sector.alpha!r}")
    print(f"sector.beta = {scn.sector.beta!r}")
    print(f"sector.margin = {scn.sector.margin!r}")
    print(f"expected_tau.lower = {sandwich.lower!r}")
    print(f"expected_tau.upper = {sandwich.upper!r}")
    print(f"bounds.k1.lower = {k1.lower!r}")
    print(f"bounds.k1.upper = {k1.upper!r}")
    try:
        interval = asymptotic_interval(scn.curves, scn.sector, scn.sigma)
    except (UnsupportedError, DomainError, MarginError) as exc:
        print(f"interval.error = {exc}")
    else:
        print(f"interval.a_beta = {interval.lower!r}")
        print(f"interval.a_alpha = {interval.upper!r}")
        print(f"interval.q_limit = {interval.q_limit!r}")
        print(f"interval.s_limit = {interval.s_limit!r}")
    if (isinstance(scn.drift, LogisticDrift)
            and isinstance(scn.curves.q, ConstantCurve)
            and isinstance(scn.curves.s, ConstantCurve)):
        quota = float(scn.curves.s.level - scn.curves.q.level)
        try:
            legacy = fixed_quota_printed_interval(
                scn.drift.growth_rate, scn.drift.capacity, scn.curves.s.level,
                quota, scn.sigma)
        except (DomainError, MarginError):
            pass
        else:
            print(f"fishery.legacy.a_beta = {legacy[0]!r}")
            print(f"fishery.legacy.a_alpha = {legacy[1]!r}")
    return EXIT_OK


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Audit record of one simulate run.

    Lists every effective parameter that can influence the run and a SHA-256
    checksum of every emitted file; it is written after all of them, so a
    complete manifest certifies a complete run.
    """

    scenario_path: str
    scenario_sha256: str
    n_paths: int
    dt: float
    t_max: float
    max_pulses: int
    seed: int
    workers: int
    dump_paths: int
    allow_invalid: bool
    out_dir: str
    wall_clock_seconds: float
    package_version: str
    numpy_version: str
    python_version: str
    files: tuple[tuple[str, str], ...]

    def lines(self) -> list[str]:
        out = [
            "manifest.version = 1",
            f"pulsesde.version = {self.package_version}",
            f"numpy.version = {self.numpy_version}",
            f"python.version = {self.python_version}",
            f"scenario.path = {self.scenario_path}",
            f"scenario.sha256 = {self.scenario_sha256}",
            f"effective.n_paths = {self.n_paths}",
            f"effective.dt = {self.dt!r}",
            f"effective.t_max = {self.t_max!r}",
            f"effective.max_pulses = {self.max_pulses}",
            f"effective.seed = {self.seed}",
            f"effective.workers = {self.workers}",
            f"effective.dump_paths = {self.dump_paths}",
            f"effective.allow_invalid = {str(self.allow_invalid).lower()}",
            f"effective.out_dir = {self.out_dir}",
            f"wall_clock_seconds = {self.wall_clock_seconds:.3f}",
        ]
        out += [f"file.{name}.sha256 = {digest}" for name, digest in self.files]
        return out

    def write(self, path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n")

    @classmethod
    def parse(cls, text: str) -> "RunManifest":
        pairs = {}
        files = []
        for line in text.splitlines():
            key, _, value = line.partition(" = ")
            if key.startswith("file.") and key.endswith(".sha256"):
                files.append((key[len("file."):-len(".sha256")], value))
            else:
                pairs[key] = value
        return cls(
            scenario_path=pairs["scenario.path"],
            scenario_sha256=pairs["scenario.sha256"],
            n_paths=int(pairs["effective.n_paths"]),
            dt=float(pairs["effective.dt"]),
            t_max=float(pairs["effective.t_max"]),
            max_pulses=int(pairs["effective.max_pulses"]),
            seed=int(pairs["effective.seed"]),
            workers=int(pairs["effective.workers"]),
            dump_paths=int(pairs["effective.dump_paths"]),
            allow_invalid=pairs["effective.allow_invalid"] == "true",
            out_dir=pairs["effective.out_dir"],
            wall_clock_seconds=float(pairs["wall_clock_seconds"]),
            package_version=pairs["pulsesde.version"],
            numpy_version=pairs["numpy.version"],
            python_version=pairs["python.version"],
            files=tuple(files),
        )

    def verify(self, out_dir) -> bool:
        """Recompute the checksums of the listed files against the directory."""
        out_dir = Path(out_dir)
        return all(_sha256(out_dir / name) == digest for name, digest in self.files)


def _summary_lines(scn, grid, n_paths, report, residuals, series, sandwich,
                   interval, validation, probe) -> list[str]:
    lines = [
        "format = pulsesde.summary.v1",
        f"run.n_paths = {n_paths}",
        f"run.dt = {grid.dt!r}",
        f"run.t_max = {grid.t_max!r}",
        f"run.max_pulses = {scn.max_pulses}",
        f"run.seed = {scn.master_seed}",
        f"run.sigma = {scn.sigma!r}",
    ]
    for check in validation.checks():
        lines.append(f"hypothesis.{check.label} = {'pass' if check.passed else 'fail'}")
    lines += [
        f"pulses.max_k = {report.max_k}",
        f"censoring.paths = {report.censored_paths}",
        f"clamp.events = {report.clamp_events}",
    ]
    for i in range(report.max_k):
        k = i + 1
        for name, est in (("tau", report.tau[i]), ("delta", report.delta[i])):
            lines += [
                f"k.{k}.{name}.mean = {est.mean!r}",
                f"k.{k}.{name}.std_err = {est.std_err!r}",
                f"k.{k}.{name}.ci_low = {est.ci_low!r}",
                f"k.{k}.{name}.ci_high = {est.ci_high!r}",
                f"k.{k}.{name}.n = {est.n}",
            ]
        lines += [
            f"k.{k}.censored_fraction = {report.censored_fraction[i]!r}",
            f"k.{k}.unreliable = {str(report.unreliable[i]).lower()}",
        ]
    for res in residuals:
        val = "undefined" if res.residual is None else repr(res.residual)
        lines.append(f"recurrence.k.{res.k}.residual = {val}")
        lines.append(f"recurrence.k.{res.k}.subset_changed = {str(res.subset_changed).lower()}")
    if series is not None:
        lines.append(f"classification = {series.classification}")
        if series.tail_mean is not None:
            lines.append(f"tail.mean = {series.tail_mean!r}")
            lines.append(f"tail.window = {series.tail_window}")
        if series.tail_within_interval is not None:
            lines.append(f"tail.within_interval = {str(series.tail_within_interval).lower()}")
    if interval is not None:
        lines += [
            f"interval.a_beta = {interval.lower!r}",
            f"interval.a_alpha = {interval.upper!r}",
            f"interval.q_limit = {interval.q_limit!r}",
            f"interval.s_limit = {interval.s_limit!r}",
        ]
    if sandwich is not None:
        lines += [
            f"sandwich.lower = {sandwich.bounds.lower!r}",
            f"sandwich.upper = {sandwich.bounds.upper!r}",
            f"sandwich.verdict = {sandwich.verdict}",
            f"sandwich.margin_se = {sandwich.margin_se!r}",
            f"sandwich.advisory = {str(sandwich.advisory).lower()}",
        ]
    if probe is not None:
        for i, (t, mean) in enumerate(probe):
            lines.append(f"decay_probe.{i}.t = {t!r}")
            lines.append(f"decay_probe.{i}.mean = {mean!r}")
    return lines


def _plot_lines(report, interval) -> list[str]:
    lines = ["k\tmean\tci_low\tci_high\ta_beta\ta_alpha"]
    a_beta = repr(interval.lower) if interval is not None else "nan"
    a_alpha = repr(interval.upper) if interval is not None else "nan"
    for i in range(report.max_k):
        est = report.delta[i]
        lines.append(
            f"{i + 1}\t{est.mean!r}\t{est.ci_low!r}\t{est.ci_high!r}\t{a_beta}\t{a_alpha}"
        )
    return lines


def _dump_lines(outcome) -> list[str]:
    rec = outcome.recorded
    lines = ["t\tx\tx_alpha\tx_beta"]
    for t, xv, lo, hi in zip(rec.times, rec.values, rec.lower, rec.upper):
        lines.append(f"{float(t)!r}\t{float(xv)!r}\t{float(lo)!r}\t{float(hi)!r}")
    return lines


def cmd_simulate(args) -> int:
    t_start = time.monotonic()
    scn = load_scenario(args.scenario)
    overrides = {}
    if args.t_max is not None:
        overrides["t_max"] = args.t_max
    if args.max_pulses is not None:
        overrides["max_pulses"] = args.max_pulses
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if overrides:
        scn = dataclasses.replace(scn, **overrides)
    grid = GridConfig(dt=args.dt, t_max=scn.t_max)

    validation = validate_hypotheses(scn)
    if not validation.ok:
        if not args.allow_invalid:
            _print_validation(validation)
            return EXIT_DOMAIN
        failed = ", ".join(f"({label})" for label in validation.failed_labels())
        print(f"warning: hypothesis {failed} failed; simulating anyway "
              f"(--allow-invalid)", file=sys.stderr)

    out_dir = Path(args.out or os.environ.get(OUT_DIR_ENV) or "pulsesde_out")
    out_dir.mkdir(parents=True, exist_ok=True)

    dump_paths = min(args.dump_paths, args.paths)
    outcomes = run_ensemble(scn, grid, args.paths, n_workers=args.workers,
                            record_indices=range(dump_paths))
    report = summarize_outcomes(outcomes)
    residuals = recurrence_check(outcomes) if report.max_k else []
    try:
        interval = asymptotic_interval(scn.curves, scn.sector, scn.sigma)
    except (UnsupportedError, DomainError, MarginError):
        interval = None
    series = classify_timeout_series(report.delta, interval) if report.max_k else None
    sandwich = None
    if report.max_k:
        try:
            sandwich = sandwich_check(scn, grid, args.paths, report=report)
        except (DomainError, MarginError):
            sandwich = None
    probe = None
    if not validation.margin.passed:
        probe = decay_probe(scn, grid, n_probe=min(args.paths, 256))

    written: list[Path] = []

    ledger_path = out_dir / "pulses.tsv"
    write_pulse_ledger(outcomes, ledger_path)
    written.append(ledger_path)

    summary_path = out_dir / "summary.txt"
    summary_path.write_text("\n".join(_summary_lines(
        scn, grid, args.paths, report, residuals, series, sandwich,
        interval, validation, probe)) + "\n")
    written.append(summary_path)

    plot_path = out_dir / "plot_data.tsv"
    plot_path.write_text("\n".join(_plot_lines(report, interval)) + "\n")
    written.append(plot_path)

    for idx in range(dump_paths):
        dump_path = out_dir / f"path_{idx:04d}.tsv"
        dump_path.write_text("\n".join(_dump_lines(outcomes[idx])) + "\n")
        written.append(dump_path)

    manifest = RunManifest(
        scenario_path=args.scenario,
        scenario_sha256=_sha256(Path(args.scenario)),
        n_paths=args.paths,
        dt=grid.dt,
        t_max=grid.t_max,
        max_pulses=scn.max_pulses,
        seed=scn.master_seed,
        workers=args.workers,
        dump_paths=dump_paths,
        allow_invalid=args.allow_invalid,
        out_dir=str(out_dir),
        wall_clock_seconds=time.monotonic() - t_start,
        package_version=__version__,
        numpy_version=np.__version__,
        python_version=platform.python_version(),
        files=tuple((path.name, _sha256(path)) for path in written),
    )
    manifest.write(out_dir / "manifest.txt")

    if report.max_k == 0:
        print(f"no path completed a pulse within t_max={grid.t_max}; "
              f"extend --t-max or loosen the scenario", file=sys.stderr)
        print(f"wrote {out_dir}")
        return EXIT_DOMAIN
    print(f"wrote {out_dir} (paths={args.paths}, pulses up to k={report.max_k}, "
          f"classification={series.classification if series else 'n/a'})")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "validate": cmd_validate,
        "bounds": cmd_bounds,
        "simulate": cmd_simulate,
    }
    try:
        return handlers[args.command](args)
    except ScenarioFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HypothesisError, MarginError, ParameterError, DomainError,
            EstimationError, UnsupportedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PulseSdeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    raise SystemExit(main())
