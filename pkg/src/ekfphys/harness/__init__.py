"""Evaluation layer: configs, metrics, record formats, orchestration, CLI."""

from .config import PRESET_NAMES, ExperimentConfig, config_from_string, load_config, load_preset
from .experiments import (
    DEFAULT_MULTIPLIERS,
    MEAN_SUITE_FRICTION,
    WORKERS_ENV,
    MetricsReport,
    SequenceMetrics,
    SweepEntry,
    SweepReport,
    build_report,
    corrupt_sequence,
    evaluate_sequence,
    filter_sequence,
    friction_sweep,
    resolve_workers,
    run_suite,
    simulate_sequence,
)
from .metrics import (
    METRIC_NAMES,
    Aggregate,
    FrameErrors,
    GatingStats,
    TrajectoryErrors,
    aggregate,
    belief_frame_errors,
    gating_stats,
    observation_frame_errors,
    recall_curve,
    rotation_error,
    summarize_errors,
    terminal_friction_error,
    trajectory_errors,
)
from .records import (
    SCHEMA_VERSION,
    BeliefRow,
    BeliefTrajectory,
    config_header,
    read_beliefs,
    read_csv,
    read_ground_truth,
    read_observations,
    read_scenario,
    write_beliefs,
    write_csv,
    write_ground_truth,
    write_observations,
    write_scenario,
)

__all__ = [
    "DEFAULT_MULTIPLIERS",
    "MEAN_SUITE_FRICTION",
    "METRIC_NAMES",
    "PRESET_NAMES",
    "SCHEMA_VERSION",
    "WORKERS_ENV",
    "Aggregate",
    "BeliefRow",
    "BeliefTrajectory",
    "ExperimentConfig",
    "FrameErrors",
    "GatingStats",
    "MetricsReport",
    "SequenceMetrics",
    "SweepEntry",
    "SweepReport",
    "TrajectoryErrors",
    "aggregate",
    "belief_frame_errors",
    "build_report",
    "config_from_string",
    "config_header",
    "corrupt_sequence",
    "evaluate_sequence",
    "filter_sequence",
    "friction_sweep",
    "gating_stats",
    "load_config",
    "load_preset",
    "observation_frame_errors",
    "read_beliefs",
    "read_csv",
    "read_ground_truth",
    "read_observations",
    "read_scenario",
    "recall_curve",
    "resolve_workers",
    "rotation_error",
    "run_suite",
    "simulate_sequence",
    "summarize_errors",
    "terminal_friction_error",
    "trajectory_errors",
    "write_beliefs",
    "write_csv",
    "write_ground_truth",
    "write_observations",
    "write_scenario",
]
