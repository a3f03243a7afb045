"""Error metrics over tracked trajectories.

All comparisons run on the observation frame grid against simulated ground
truth. Rotation errors are geodesic angles of the relative rotation,
velocity errors Euclidean norms of the difference, and friction errors are
measured in mu space (|theta_est^2 - mu_gt|) so that estimates from either
filter mode are directly comparable.

Frames without an estimate carry NaN in the per-frame series. Averages skip
them; recall counts them as failures, which is what lets a filter that
always reports a pose dominate a detector that sometimes misses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..liegroup import Rotation, log_so3
from ..synth import GroundTruthTrajectory, ObservationLog
from .records import BeliefTrajectory

__all__ = [
    "METRIC_NAMES",
    "Aggregate",
    "FrameErrors",
    "GatingStats",
    "TrajectoryErrors",
    "aggregate",
    "belief_frame_errors",
    "gating_stats",
    "observation_frame_errors",
    "recall_curve",
    "rotation_error",
    "summarize_errors",
    "terminal_friction_error",
    "trajectory_errors",
]

METRIC_NAMES = ("position", "rotation", "linear_velocity", "angular_velocity", "friction")


def rotation_error(r_est: Rotation, r_gt: Rotation) -> float:
    """Geodesic angle between two rotations, in [0, pi]."""
    return float(np.linalg.norm(log_so3(r_est @ r_gt.inverse())))


@dataclass(frozen=True)
class FrameErrors:
    """Per-frame error series; NaN marks frames without an estimate."""

    frames: np.ndarray
    position: np.ndarray
    rotation: np.ndarray
    linear_velocity: np.ndarray
    angular_velocity: np.ndarray
    friction: np.ndarray

    def select(self, from_frame: int) -> "FrameErrors":
        keep = self.frames >= from_frame
        return FrameErrors(
            self.frames[keep],
            self.position[keep],
            self.rotation[keep],
            self.linear_velocity[keep],
            self.angular_velocity[keep],
            self.friction[keep],
        )

    def metric(self, name: str) -> np.ndarray:
        if name not in METRIC_NAMES:
            raise KeyError(name)
        return getattr(self, name)


@dataclass(frozen=True)
class TrajectoryErrors:
    """Per-metric averages over an evaluation window."""

    position: float
    rotation: float
    linear_velocity: float
    angular_velocity: float
    friction: float

    def items(self):
        return tuple((name, getattr(self, name)) for name in METRIC_NAMES)


def _nanmean(values: np.ndarray) -> float:
    mask = np.isfinite(values)
    return float(values[mask].mean()) if mask.any() else float("nan")


def belief_frame_errors(
    beliefs: BeliefTrajectory, gt: GroundTruthTrajectory, body: int = 0
) -> FrameErrors:
    """Errors of the posterior means against ground truth at their frames."""
    sim_idx = gt.frame_indices(beliefs.obs_rate)
    mu_gt = gt.scenario.mu_combined
    n = len(beliefs.rows)
    frames = np.zeros(n, dtype=int)
    cols = {name: np.full(n, np.nan) for name in METRIC_NAMES}
    for k, row in enumerate(beliefs.rows):
        frames[k] = row.frame
        s = row.state
        gt_pose = gt.pose_at(int(sim_idx[row.frame]), body)
        gt_twist = gt.twist_at(int(sim_idx[row.frame]), body)
        cols["position"][k] = np.linalg.norm(s.p - gt_pose.p)
        cols["rotation"][k] = rotation_error(s.R, gt_pose.R)
        cols["linear_velocity"][k] = np.linalg.norm(s.v - gt_twist.v)
        cols["angular_velocity"][k] = np.linalg.norm(s.omega - gt_twist.omega)
        cols["friction"][k] = abs(s.theta**2 - mu_gt)
    return FrameErrors(frames, *(cols[name] for name in METRIC_NAMES))


def observation_frame_errors(
    log: ObservationLog, gt: GroundTruthTrajectory, body: int = 0
) -> FrameErrors:
    """Detector-baseline errors: raw poses, finite-difference velocities.

    Velocities at a frame difference the pose against the previous valid
    frame; frames without one (and missed frames) stay NaN. The detector
    estimates no friction, so that column is all NaN.
    """
    sim_idx = gt.frame_indices(log.obs_rate)
    n = len(log.frames)
    frames = np.arange(n)
    cols = {name: np.full(n, np.nan) for name in METRIC_NAMES}
    prev = None
    for k, f in enumerate(log.frames):
        if not f.valid:
            continue
        gt_pose = gt.pose_at(int(sim_idx[k]), body)
        gt_twist = gt.twist_at(int(sim_idx[k]), body)
        cols["position"][k] = np.linalg.norm(f.pose.p - gt_pose.p)
        cols["rotation"][k] = rotation_error(f.pose.R, gt_pose.R)
        if prev is not None:
            t_prev, pose_prev = prev
            dt = f.t - t_prev
            v = (f.pose.p - pose_prev.p) / dt
            w = log_so3(f.pose.R @ pose_prev.R.inverse()) / dt
            cols["linear_velocity"][k] = np.linalg.norm(v - gt_twist.v)
            cols["angular_velocity"][k] = np.linalg.norm(w - gt_twist.omega)
        prev = (f.t, f.pose)
    return FrameErrors(frames, *(cols[name] for name in METRIC_NAMES))


def summarize_errors(errors: FrameErrors, from_frame: int = 0) -> TrajectoryErrors:
    window = errors.select(from_frame)
    return TrajectoryErrors(*(_nanmean(window.metric(name)) for name in METRIC_NAMES))


def trajectory_errors(
    beliefs: BeliefTrajectory,
    gt: GroundTruthTrajectory,
    from_frame: int = 0,
    body: int = 0,
) -> TrajectoryErrors:
    """Mean errors of a belief trajectory over frames >= from_frame."""
    return summarize_errors(belief_frame_errors(beliefs, gt, body), from_frame)


def terminal_friction_error(beliefs: BeliefTrajectory, gt: GroundTruthTrajectory) -> float:
    return abs(beliefs.rows[-1].state.theta ** 2 - gt.scenario.mu_combined)


def recall_curve(errors, thresholds) -> np.ndarray:
    """Fraction of frames with error below each threshold.

    NaN entries (frames without an estimate) count as failures at every
    threshold, so the result is monotone nondecreasing but need not reach 1.
    """
    e = np.asarray(errors, dtype=float)
    t = np.asarray(thresholds, dtype=float)
    if t.size == 0:
        raise ValueError("no thresholds")
    if np.any(np.diff(t) < 0.0):
        raise ValueError("thresholds must be sorted ascending")
    if e.size == 0:
        raise ValueError("no frames to evaluate")
    finite = e[np.isfinite(e)]
    hits = np.array([np.count_nonzero(finite < th) for th in t], dtype=float)
    return hits / e.size


@dataclass(frozen=True)
class Aggregate:
    """Order statistics of one metric across sequences."""

    n: int
    mean: float
    median: float
    q1: float
    q3: float


def aggregate(values) -> Aggregate:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("nothing to aggregate")
    if not np.all(np.isfinite(v)):
        raise ValueError("aggregate over non-finite values")
    q1, median, q3 = np.percentile(v, [25.0, 50.0, 75.0])
    return Aggregate(int(v.size), float(v.mean()), float(median), float(q1), float(q3))


@dataclass(frozen=True)
class GatingStats:
    """Correction bookkeeping: how many offered observations were accepted."""

    n_frames: int
    n_offered: int
    n_accepted: int
    n_rejected: int

    @property
    def rejected_fraction(self) -> float:
        return self.n_rejected / self.n_offered if self.n_offered else float("nan")


def gating_stats(beliefs: BeliefTrajectory) -> GatingStats:
    offered = [row.accepted for row in beliefs.rows if row.accepted is not None]
    accepted = sum(1 for a in offered if a)
    return GatingStats(
        n_frames=len(beliefs.rows),
        n_offered=len(offered),
        n_accepted=accepted,
        n_rejected=len(offered) - accepted,
    )
