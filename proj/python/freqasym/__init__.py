"""Frequency asymmetry simulation and analysis."""

from ._freqasym import (
    Analysis,
    BandMinutes,
    BatchResult,
    ComparisonSummary,
    EmptyTrace,
    Error,
    FrequencyTrace,
    GapPolicyViolation,
    HistogramPD,
    IslandedNetwork,
    MalformedRow,
    MetricsReport,
    MismatchedNominalFrequency,
    NewtonDivergence,
    NonConvergence,
    NonMonotonicTimestamps,
    NoSynchronousInertia,
    OutOfRangeFrequency,
    ParseError,
    Scenario,
    SeedRun,
    SplitSigma,
    SystemFile,
    ValidationError,
    analyze,
    asymmetry,
    compare_windows,
    compute_metrics,
    estimate_pd,
    load_scenario,
    load_system,
    minutes_outside_band,
    read_trace,
    results_table,
    run_batch,
    sigma_total,
    split_sigma,
    trace_to_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
