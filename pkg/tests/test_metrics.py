"""Error metrics: rotation/trajectory errors, recall curves, aggregation."""

from __future__ import annotations

import numpy as np
import pytest

from ekfphys.dynamics import Box
from ekfphys.ekf import ObservationFrame
from ekfphys.harness.metrics import (
    METRIC_NAMES,
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
from ekfphys.harness.records import BeliefRow, BeliefTrajectory
from ekfphys.liegroup import FilterState, Pose, Rotation, Twist, exp_so3
from ekfphys.synth import BodyTrajectory, GroundTruthTrajectory, ObservationLog, Scenario, ScenarioObject

OBS_RATE = 30.0
SIM_RATE = 240.0


def _random_rotation(rng):
    return exp_so3(rng.normal(size=3))


def _make_gt(n_frames=12, mu_obj=0.3, seed=0, v=(0.4, 0.0, 0.0), w=(0.0, 0.0, 1.0)):
    """Straight-line constant-twist trajectory, analytic and contact free."""
    duration = n_frames / OBS_RATE
    n_steps = int(round(duration * SIM_RATE))
    times = np.arange(n_steps + 1) / SIM_RATE
    v = np.asarray(v, float)
    w = np.asarray(w, float)
    p = times[:, None] * v
    quat = np.array([exp_so3(w * t).quat for t in times])
    obj = ScenarioObject(
        name="box",
        shape=Box([0.05, 0.05, 0.05]),
        mass=1.0,
        friction=mu_obj,
        pose=Pose(p[0], Rotation.identity()),
        twist=Twist(w, v),
    )
    scenario = Scenario(
        objects=(obj,), background_friction=0.2, duration=duration, seed=seed, kind="single"
    )
    body = BodyTrajectory(
        p=p, quat=quat, v=np.tile(v, (len(times), 1)), omega=np.tile(w, (len(times), 1))
    )
    return GroundTruthTrajectory(times=times, bodies=(body,), scenario=scenario, sim_rate=SIM_RATE)


def _beliefs_from_gt(gt, init_frame=0, offset=None, theta=None):
    """Belief rows copying ground truth, optionally perturbed in position."""
    idx = gt.frame_indices(OBS_RATE)
    theta_gt = gt.scenario.theta_gt
    rows = []
    for k in range(init_frame, len(idx)):
        pose = gt.pose_at(int(idx[k]))
        twist = gt.twist_at(int(idx[k]))
        p = pose.p if offset is None else pose.p + offset
        state = FilterState(p, pose.R, twist.v, twist.omega, theta_gt if theta is None else theta)
        rows.append(BeliefRow(k, float(gt.times[idx[k]]), state, True if k > init_frame else None, 0.0 if k > init_frame else None))
    return BeliefTrajectory(tuple(rows), "ekfphys", 0.0, init_frame, OBS_RATE)


def test_rotation_error_identity_and_yaw():
    r = Rotation.identity()
    assert rotation_error(r, r) == 0.0
    ten_deg = exp_so3([0.0, 0.0, np.deg2rad(10.0)])
    assert abs(rotation_error(ten_deg, r) - 0.17453292519943295) < 1e-12


def test_rotation_error_left_invariant():
    rng = np.random.default_rng(7)
    for _ in range(100):
        a, b, c = (_random_rotation(rng) for _ in range(3))
        base = rotation_error(a, b)
        assert abs(rotation_error(c @ a, c @ b) - base) < 1e-9
        assert base <= np.pi + 1e-12


def test_trajectory_errors_zero_for_exact_beliefs():
    gt = _make_gt()
    beliefs = _beliefs_from_gt(gt)
    errs = trajectory_errors(beliefs, gt)
    for name, value in errs.items():
        assert value == pytest.approx(0.0, abs=1e-12), name


def test_trajectory_errors_constant_offset_every_cut():
    gt = _make_gt()
    beliefs = _beliefs_from_gt(gt, offset=np.array([0.006, 0.008, 0.0]))
    for cut in (0, 3, 7, 11):
        errs = trajectory_errors(beliefs, gt, from_frame=cut)
        assert errs.position == pytest.approx(0.01, abs=1e-12)
        assert errs.rotation == pytest.approx(0.0, abs=1e-12)


def test_friction_error_in_mu_space():
    gt = _make_gt(mu_obj=0.3)  # combined mu = 0.06
    beliefs = _beliefs_from_gt(gt, theta=0.1)
    errs = trajectory_errors(beliefs, gt)
    assert errs.friction == pytest.approx(abs(0.1**2 - 0.06), abs=1e-12)
    assert terminal_friction_error(beliefs, gt) == pytest.approx(0.05, abs=1e-12)


def test_belief_frame_errors_window_selection():
    gt = _make_gt()
    beliefs = _beliefs_from_gt(gt, init_frame=2)
    fe = belief_frame_errors(beliefs, gt)
    assert fe.frames[0] == 2
    assert len(fe.frames) == 10
    window = fe.select(5)
    assert window.frames[0] == 5 and len(window.frames) == 7


def _obs_log_from_gt(gt, miss=(), sigma=0.0, seed=3):
    """Observation frames equal to ground truth except the missed set."""
    idx = gt.frame_indices(OBS_RATE)
    rng = np.random.default_rng(seed)
    frames = []
    for k in range(len(idx)):
        t = float(gt.times[idx[k]])
        if k in miss:
            frames.append(ObservationFrame(t, None))
            continue
        pose = gt.pose_at(int(idx[k]))
        p = pose.p + sigma * rng.normal(size=3)
        frames.append(ObservationFrame(t, Pose(p, pose.R)))
    return ObservationLog(
        frames=tuple(frames),
        outlier_frames=(),
        missed_frames=tuple(sorted(miss)),
        sigma_p=sigma,
        sigma_r=0.0,
        outlier_rate=0.0,
        miss_rate=len(miss) / len(idx),
        seed=seed,
        obs_rate=OBS_RATE,
    )


def test_observation_errors_finite_difference_velocities():
    gt = _make_gt(v=(0.5, -0.2, 0.0), w=(0.0, 0.0, 2.0))
    log = _obs_log_from_gt(gt)
    fe = observation_frame_errors(log, gt)
    # clean poses: position/rotation exact, and constant twist means the
    # finite differences of rotations recover omega only approximately
    # (chord vs arc); position differences are exact for straight lines.
    assert np.allclose(fe.position, 0.0, atol=1e-12)
    assert np.isnan(fe.linear_velocity[0]) and np.isnan(fe.angular_velocity[0])
    assert np.nanmax(fe.linear_velocity) < 1e-9
    assert np.nanmax(fe.angular_velocity) < 1e-9
    assert np.all(np.isnan(fe.friction))


def test_observation_errors_skip_missed_frames():
    gt = _make_gt()
    log = _obs_log_from_gt(gt, miss={3, 4})
    fe = observation_frame_errors(log, gt)
    assert np.isnan(fe.position[3]) and np.isnan(fe.position[4])
    # frame 5 differences against frame 2, still exact for constant twist
    assert fe.linear_velocity[5] < 1e-9
    means = summarize_errors(fe)
    assert np.isfinite(means.position)


def test_recall_perfect_estimates():
    errors = np.zeros(40)
    recall = recall_curve(errors, [0.001, 0.01, 0.1])
    assert np.all(recall == 1.0)


def test_recall_monotone_random():
    rng = np.random.default_rng(11)
    for _ in range(50):
        errors = rng.exponential(0.05, size=rng.integers(5, 80))
        if rng.random() < 0.5:
            errors[rng.integers(0, errors.size)] = np.nan
        thresholds = np.sort(rng.uniform(0.0001, 0.3, size=7))
        recall = recall_curve(errors, thresholds)
        assert np.all(np.diff(recall) >= -1e-15)
        assert np.all((recall >= 0.0) & (recall <= 1.0))


def test_recall_miss_plateau_counting_oracle():
    # 20% misses: baseline can never exceed 0.8; complete estimates reach 1.0
    n = 200
    errors = np.full(n, 0.001)
    errors[::5] = np.nan
    baseline = recall_curve(errors, [0.01, 1.0, 100.0])
    assert np.all(baseline <= 0.8 + 1e-12)
    assert baseline[-1] == pytest.approx(0.8)
    filtered = recall_curve(np.full(n, 0.001), [0.01, 1.0, 100.0])
    assert np.all(filtered == 1.0)


def test_recall_validates_inputs():
    with pytest.raises(ValueError):
        recall_curve([0.1, 0.2], [0.05, 0.01])
    with pytest.raises(ValueError):
        recall_curve([], [0.05])
    with pytest.raises(ValueError):
        recall_curve([0.1], [])


def test_aggregate_matches_sort_oracle():
    """Median/quartiles against an independent sorted-array implementation."""

    def oracle_quantile(sorted_values, q):
        h = (len(sorted_values) - 1) * q
        lo = int(np.floor(h))
        hi = min(lo + 1, len(sorted_values) - 1)
        return sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo])

    rng = np.random.default_rng(23)
    for _ in range(200):
        values = rng.normal(size=int(rng.integers(1, 60)))
        agg = aggregate(values)
        s = np.sort(values)
        assert agg.n == values.size
        assert agg.mean == pytest.approx(values.mean(), abs=1e-12)
        assert agg.median == pytest.approx(oracle_quantile(s, 0.5), abs=1e-9)
        assert agg.q1 == pytest.approx(oracle_quantile(s, 0.25), abs=1e-9)
        assert agg.q3 == pytest.approx(oracle_quantile(s, 0.75), abs=1e-9)
        assert agg.q1 <= agg.median <= agg.q3


def test_aggregate_rejects_empty_and_nan():
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([1.0, np.nan])


def test_gating_stats_counts():
    gt = _make_gt()
    beliefs = _beliefs_from_gt(gt)
    rows = list(beliefs.rows)
    rows[3] = BeliefRow(rows[3].frame, rows[3].t, rows[3].state, False, 99.0)
    rows[5] = BeliefRow(rows[5].frame, rows[5].t, rows[5].state, None, None)
    stats = gating_stats(BeliefTrajectory(tuple(rows), "ekfphys", 0.0, 0, OBS_RATE))
    assert stats.n_frames == 12
    assert stats.n_offered == 10
    assert stats.n_rejected == 1
    assert stats.n_accepted == 9
    assert stats.rejected_fraction == pytest.approx(0.1)


def test_metric_names_frozen():
    assert METRIC_NAMES == (
        "position",
        "rotation",
        "linear_velocity",
        "angular_velocity",
        "friction",
    )
