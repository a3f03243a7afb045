"""Experiment orchestration: per-sequence pipelines, parallel suites, sweeps.

A sequence is one seeded scenario taken through simulate -> corrupt ->
filter -> evaluate. Suites map that over seed lists, optionally across a
process pool; every job is a pure function of (config, seed), so scheduling
order cannot change results, and outputs are sorted by seed before use.
"""

from __future__ import annotations

import dataclasses
import multiprocessing
import os
from dataclasses import dataclass

import numpy as np

from ..ekf import WorldContext, run_filter
from ..errors import ConfigError
from ..synth import ObservationLog, Scenario, corrupt, sample_scenario, simulate_ground_truth
from .config import ExperimentConfig
from .metrics import (
    Aggregate,
    GatingStats,
    TrajectoryErrors,
    aggregate,
    belief_frame_errors,
    gating_stats,
    observation_frame_errors,
    recall_curve,
    summarize_errors,
    terminal_friction_error,
    trajectory_errors,
)
from .records import BeliefTrajectory

__all__ = [
    "DEFAULT_MULTIPLIERS",
    "MEAN_SUITE_FRICTION",
    "WORKERS_ENV",
    "MetricsReport",
    "SequenceMetrics",
    "SweepEntry",
    "SweepReport",
    "build_report",
    "corrupt_sequence",
    "evaluate_sequence",
    "filter_sequence",
    "friction_sweep",
    "normalize_multipliers",
    "resolve_workers",
    "run_suite",
    "simulate_sequence",
]

WORKERS_ENV = "EKFPHYS_WORKERS"

# Mean combined friction of the sampled suite: E[U(0.1,0.5)] * 0.2 background.
MEAN_SUITE_FRICTION = 0.06

DEFAULT_MULTIPLIERS = (0.0, 0.5, 1.0, 2.0, "mean")


def resolve_workers(explicit: int | None = None) -> int:
    """Worker count: explicit flag, else the environment default, else 1."""
    if explicit is not None:
        if explicit < 1:
            raise ConfigError(f"worker count must be >= 1, got {explicit}")
        return explicit
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer") from None
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {n}")
        return n
    return 1


def _pmap(fn, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with multiprocessing.Pool(min(workers, len(items))) as pool:
        return pool.map(fn, items)


# ---------------------------------------------------------------------------
# pipeline stages


def simulate_sequence(config: ExperimentConfig, seed: int):
    """Sample and simulate one scenario; returns (scenario, ground truth)."""
    scenario = sample_scenario(seed, config.kind)
    if scenario.duration != config.duration:
        scenario = dataclasses.replace(scenario, duration=config.duration)
    return scenario, simulate_ground_truth(scenario, config.sim_rate)


def corrupt_sequence(config: ExperimentConfig, gt) -> ObservationLog:
    """Noisy detector stand-in; corruption stream is offset from the scene seed."""
    return corrupt(
        gt,
        seed=gt.scenario.seed + config.seed_offset,
        sigma_p=config.sigma_p,
        sigma_r=config.sigma_r,
        outlier_rate=config.outlier_rate,
        miss_rate=config.miss_rate,
        obs_rate=config.obs_rate,
    )


def filter_sequence(
    config: ExperimentConfig,
    gt,
    log: ObservationLog,
    cut_frame: int | None = None,
    theta0: float | None = None,
    mode: str | None = None,
) -> BeliefTrajectory:
    """Run the tracker on an observation log over the scenario's world."""
    mode = config.mode if mode is None else mode
    theta0 = config.theta0 if theta0 is None else theta0
    sim_idx = gt.frame_indices(log.obs_rate)

    def context(init_frame: int) -> WorldContext:
        return WorldContext(gt.world_at(int(sim_idx[init_frame])), body_index=0)

    result = run_filter(
        log.frames,
        context,
        config.noise_config(),
        mode=mode,
        theta0=theta0,
        predict_rate=config.predict_rate,
        cut_frame=cut_frame,
    )
    return BeliefTrajectory.from_filter_result(result, mode, theta0, log.obs_rate)


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class SequenceMetrics:
    """Everything the report needs from one sequence."""

    seed: int
    mu_gt: float
    init_frame: int
    filter_by_cut: dict[int, TrajectoryErrors]
    observation_by_cut: dict[int, TrajectoryErrors]
    prediction_by_cut: dict[int, TrajectoryErrors]
    terminal_friction_error: float
    gating: GatingStats
    outliers_offered: int
    outliers_rejected: int
    clean_offered: int
    clean_rejected: int
    filter_position: np.ndarray
    observation_position: np.ndarray


def evaluate_sequence(
    config: ExperimentConfig,
    gt,
    log: ObservationLog,
    beliefs: BeliefTrajectory,
    predictions: dict[int, BeliefTrajectory] | None = None,
) -> SequenceMetrics:
    fe_filter = belief_frame_errors(beliefs, gt)
    fe_obs = observation_frame_errors(log, gt).select(beliefs.init_frame)
    outlier_set = set(log.outlier_frames)
    offered = [row for row in beliefs.rows if row.accepted is not None]
    outliers_offered = sum(1 for r in offered if r.frame in outlier_set)
    outliers_rejected = sum(1 for r in offered if r.frame in outlier_set and not r.accepted)
    return SequenceMetrics(
        seed=gt.scenario.seed,
        mu_gt=gt.scenario.mu_combined,
        init_frame=beliefs.init_frame,
        filter_by_cut={c: summarize_errors(fe_filter, c) for c in config.cut_frames},
        observation_by_cut={c: summarize_errors(fe_obs, c) for c in config.cut_frames},
        prediction_by_cut={
            c: trajectory_errors(b, gt, from_frame=c) for c, b in (predictions or {}).items()
        },
        terminal_friction_error=terminal_friction_error(beliefs, gt),
        gating=gating_stats(beliefs),
        outliers_offered=outliers_offered,
        outliers_rejected=outliers_rejected,
        clean_offered=len(offered) - outliers_offered,
        clean_rejected=sum(
            1 for r in offered if r.frame not in outlier_set and not r.accepted
        ),
        filter_position=fe_filter.position,
        observation_position=fe_obs.position,
    )


@dataclass(frozen=True)
class MetricsReport:
    """Per-sequence series plus pooled recall; aggregates are recomputed on
    demand from the per-sequence values rather than stored."""

    config: ExperimentConfig
    seeds: tuple[int, ...]
    sequences: tuple[SequenceMetrics, ...]
    recall_thresholds: tuple[float, ...]
    filter_recall: np.ndarray
    observation_recall: np.ndarray

    def series(self, source: str, cut: int, metric: str) -> np.ndarray:
        table = {
            "filter": lambda s: s.filter_by_cut,
            "observation": lambda s: s.observation_by_cut,
            "prediction": lambda s: s.prediction_by_cut,
        }[source]
        return np.array([getattr(table(s)[cut], metric) for s in self.sequences])

    def aggregate_errors(self, source: str, cut: int, metric: str) -> Aggregate:
        return aggregate(self.series(source, cut, metric))

    def pooled_gating(self) -> dict[str, int]:
        keys = (
            "outliers_offered",
            "outliers_rejected",
            "clean_offered",
            "clean_rejected",
        )
        totals = {k: int(sum(getattr(s, k) for s in self.sequences)) for k in keys}
        totals["offered"] = int(sum(s.gating.n_offered for s in self.sequences))
        totals["accepted"] = int(sum(s.gating.n_accepted for s in self.sequences))
        totals["rejected"] = int(sum(s.gating.n_rejected for s in self.sequences))
        return totals


def build_report(config: ExperimentConfig, sequences) -> MetricsReport:
    sequences = tuple(sorted(sequences, key=lambda s: s.seed))
    if not sequences:
        raise ConfigError("no sequences to report on")
    thresholds = config.recall_thresholds
    pooled_filter = np.concatenate([s.filter_position for s in sequences])
    pooled_obs = np.concatenate([s.observation_position for s in sequences])
    return MetricsReport(
        config=config,
        seeds=tuple(s.seed for s in sequences),
        sequences=sequences,
        recall_thresholds=thresholds,
        filter_recall=recall_curve(pooled_filter, thresholds),
        observation_recall=recall_curve(pooled_obs, thresholds),
    )


def _sequence_job(args) -> SequenceMetrics:
    config, seed, with_prediction = args
    _, gt = simulate_sequence(config, seed)
    log = corrupt_sequence(config, gt)
    beliefs = filter_sequence(config, gt, log)
    predictions = None
    if with_prediction:
        predictions = {
            c: filter_sequence(config, gt, log, cut_frame=c) for c in config.predict_cut_frames
        }
    return evaluate_sequence(config, gt, log, beliefs, predictions)


def run_suite(
    config: ExperimentConfig,
    seeds=None,
    workers: int | None = None,
    with_prediction: bool = False,
) -> MetricsReport:
    """Full pipeline over a seed list; one independent job per seed."""
    seeds = tuple(sorted(config.seeds if seeds is None else seeds))
    jobs = [(config, s, with_prediction) for s in seeds]
    return build_report(config, _pmap(_sequence_job, jobs, resolve_workers(workers)))


# ---------------------------------------------------------------------------
# friction-initialization sweep


@dataclass(frozen=True)
class SweepEntry:
    label: str
    seed: int
    theta0: float
    terminal_error: float
    final_mu: float


@dataclass(frozen=True)
class SweepReport:
    config: ExperimentConfig
    labels: tuple[str, ...]
    entries: tuple[SweepEntry, ...]

    def terminal_errors(self, label: str) -> np.ndarray:
        return np.array([e.terminal_error for e in self.entries if e.label == label])

    def aggregate_terminal(self, label: str) -> Aggregate:
        return aggregate(self.terminal_errors(label))


def normalize_multipliers(multipliers) -> tuple[tuple[str, float | None], ...]:
    """(label, value) pairs; the 'mean' token maps to value None."""
    out: list[tuple[str, float | None]] = []
    for m in multipliers:
        if isinstance(m, str) and m.strip().lower() == "mean":
            pair: tuple[str, float | None] = ("mean", None)
        else:
            try:
                value = float(m)
            except (TypeError, ValueError):
                raise ConfigError(f"bad friction multiplier {m!r}") from None
            if value < 0.0:
                raise ConfigError(f"friction multipliers must be nonnegative, got {value}")
            pair = (repr(value), value)
        if any(pair[0] == label for label, _ in out):
            raise ConfigError(f"duplicate multiplier {pair[0]}")
        out.append(pair)
    if not out:
        raise ConfigError("no friction multipliers given")
    return tuple(out)


def sweep_theta0(scenario: Scenario, multiplier: float | None) -> float:
    """Initial friction parameter for one sweep cell.

    A numeric multiplier scales the scenario's true combined coefficient;
    the 'mean' cell (None) uses the suite-wide mean coefficient instead.
    """
    mu0 = MEAN_SUITE_FRICTION if multiplier is None else multiplier * scenario.mu_combined
    return float(np.sqrt(mu0))


def _sweep_base_job(args):
    config, seed = args
    _, gt = simulate_sequence(config, seed)
    return gt, corrupt_sequence(config, gt)


def _sweep_run_job(args) -> SweepEntry:
    config, gt, log, label, multiplier = args
    theta0 = sweep_theta0(gt.scenario, multiplier)
    beliefs = filter_sequence(config, gt, log, theta0=theta0)
    return SweepEntry(
        label=label,
        seed=gt.scenario.seed,
        theta0=theta0,
        terminal_error=terminal_friction_error(beliefs, gt),
        final_mu=beliefs.rows[-1].state.theta ** 2,
    )


def friction_sweep(
    config: ExperimentConfig,
    multipliers=DEFAULT_MULTIPLIERS,
    workers: int | None = None,
) -> SweepReport:
    """Rerun the suite once per friction-initialization multiplier."""
    pairs = normalize_multipliers(multipliers)
    seeds = tuple(sorted(config.seeds))
    n_workers = resolve_workers(workers)
    bases = _pmap(_sweep_base_job, [(config, s) for s in seeds], n_workers)
    jobs = [
        (config, gt, log, label, mult) for gt, log in bases for label, mult in pairs
    ]
    entries = _pmap(_sweep_run_job, jobs, n_workers)
    label_order = {label: i for i, (label, _) in enumerate(pairs)}
    entries.sort(key=lambda e: (label_order[e.label], e.seed))
    return SweepReport(config=config, labels=tuple(l for l, _ in pairs), entries=tuple(entries))
