"""pulsesde: impulsive diffusions between control curves.

A diffusion dX = f(X) dt + sigma * X dB starts on a lower control curve q,
runs until it first hits an upper curve s, and is instantly reset onto q;
the hit times are the pulses.  The package simulates the impulsive system
with a reproducible Euler-Maruyama ensemble, provides the closed-form
geometric-Brownian oracles that bracket the expected pulse timeouts, and
verifies the bracketing, monotonicity and convergence claims by Monte
Carlo.
"""

__version__ = "0.1.0"

from .cli import RunManifest
from .errors import (
    DomainError,
    EstimationError,
    HypothesisError,
    MarginError,
    ParameterError,
    PulseSdeError,
    RangeError,
    ScenarioFileError,
    UnsupportedError,
)
from .estimator import (
    MeanEstimate,
    PulseExpectationReport,
    SandwichVerdict,
    TimeoutSeriesReport,
    classify_timeout_series,
    decay_probe,
    estimate_pulse_expectations,
    sandwich_check,
    summarize_outcomes,
)
from .gbm import (
    AsymptoticInterval,
    TauBounds,
    asymptotic_interval,
    drift_margin,
    expected_hit_time,
    fixed_quota_printed_interval,
    gbm_value,
    tau_sandwich,
    timeout_bounds_at_k,
)
from .impulse import (
    PathOutcome,
    PulseRecord,
    RecurrenceResidual,
    SegmentSamples,
    global_solution_lookup,
    pulse_ledger_lines,
    recurrence_check,
    run_ensemble,
    run_impulsive_path,
    write_pulse_ledger,
)
from .model import (
    ClosureApproachCurve,
    ConstantCurve,
    ControlCurves,
    HypothesisCheck,
    LinearDrift,
    LogisticDrift,
    PolynomialDrift,
    Scenario,
    SectorBounds,
    TableCurve,
    ValidationReport,
    derive_sector_bounds,
    evaluate_drift,
    make_closure_fishery,
    make_fixed_quota_fishery,
    validate_hypotheses,
)
from .paths import (
    CoupledTriple,
    CrossingEvent,
    GridConfig,
    NoiseStream,
    em_step,
    interpolate_crossing,
    run_coupled_triple,
    run_to_crossing,
)
from .scenario_io import load_scenario, parse_scenario_text, save_scenario, scenario_to_text
