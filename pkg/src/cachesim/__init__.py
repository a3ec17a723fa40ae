"""Cache-replacement simulation with prediction-guided and guarded policies.

The package models paging with miss-count cost: traces of page requests are
replayed against eviction policies (classical, prediction-following, switching
combinations, and a phase-based robustification wrapper), and costs are
reported relative to the offline optimum.
"""

from .guard import (
    GuardPolicy,
    InvariantViolation,
    PhaseReport,
    PhaseStats,
    harmonic,
    phase_report,
    phase_stats_csv,
    robustness_bound,
)
from .harness import (
    CSV_COLUMNS,
    ComparisonTable,
    ExperimentConfig,
    RunTable,
    build_bundle,
    compare,
    load_traces,
    run,
)
from .oracle import (
    BeladyOutcome,
    belady_labels,
    belady_simulate,
    brute_force_opt,
    current_one_pages,
    fitf_page,
    opt_cost,
    rb_random_policy_cost,
)
from .policy import (
    BeladyPolicy,
    BlindOraclePolicy,
    ContractViolation,
    EvictionContext,
    FitFFollowerPolicy,
    LRBFollowerPolicy,
    LRUPolicy,
    MarkerPolicy,
    Policy,
    RunResult,
    SwitchDeterministicPolicy,
    SwitchRandomizedPolicy,
    build_policy,
    simulate,
)
from .predict import (
    PredictionBundle,
    PredictionError,
    PredictionKind,
    binary_from_nrt,
    flip_labels,
    inverted_nrt,
    load_bundle_csv,
    measure_error,
    noisy_fitf,
    perfect_labels,
    perfect_nrt,
    pleco,
    popu,
    save_bundle_csv,
    synthetic_nrt,
)
from .trace import (
    PageId,
    Request,
    SetAssociativeConfig,
    Trace,
    adversarial_pinning_trace,
    compute_next_occurrence,
    cyclic_trace,
    ingest_address_trace,
    ingest_brightkite,
    ingest_citibike,
    parse_plain_trace,
)

__version__ = "0.1.0"

__all__ = [
    "BeladyOutcome",
    "BeladyPolicy",
    "BlindOraclePolicy",
    "CSV_COLUMNS",
    "ComparisonTable",
    "ContractViolation",
    "EvictionContext",
    "ExperimentConfig",
    "FitFFollowerPolicy",
    "GuardPolicy",
    "InvariantViolation",
    "LRBFollowerPolicy",
    "LRUPolicy",
    "MarkerPolicy",
    "PageId",
    "PhaseReport",
    "PhaseStats",
    "Policy",
    "PredictionBundle",
    "PredictionError",
    "PredictionKind",
    "Request",
    "RunResult",
    "RunTable",
    "SetAssociativeConfig",
    "SwitchDeterministicPolicy",
    "SwitchRandomizedPolicy",
    "Trace",
    "adversarial_pinning_trace",
    "belady_labels",
    "belady_simulate",
    "binary_from_nrt",
    "brute_force_opt",
    "build_bundle",
    "build_policy",
    "compare",
    "compute_next_occurrence",
    "current_one_pages",
    "cyclic_trace",
    "fitf_page",
    "flip_labels",
    "harmonic",
    "ingest_address_trace",
    "ingest_brightkite",
    "ingest_citibike",
    "inverted_nrt",
    "load_bundle_csv",
    "load_traces",
    "measure_error",
    "noisy_fitf",
    "opt_cost",
    "parse_plain_trace",
    "perfect_labels",
    "perfect_nrt",
    "phase_report",
    "phase_stats_csv",
    "pleco",
    "popu",
    "rb_random_policy_cost",
    "robustness_bound",
    "run",
    "save_bundle_csv",
    "simulate",
    "synthetic_nrt",
]
