"""Suite orchestration: worker resolution, sweeps, report assembly."""

from __future__ import annotations

import numpy as np
import pytest

from ekfphys.errors import ConfigError
from ekfphys.harness.config import config_from_string
from ekfphys.harness.experiments import (
    DEFAULT_MULTIPLIERS,
    MEAN_SUITE_FRICTION,
    WORKERS_ENV,
    friction_sweep,
    normalize_multipliers,
    resolve_workers,
    run_suite,
    sweep_theta0,
)
from ekfphys.synth import sample_scenario

MINI = """
[scenario]
seeds = 0,1
duration = 1.0

[evaluation]
cut_frames = 0,10
predict_cut_frames = 10
recall_thresholds = 0.01,0.05,0.1
"""

# Noise-free fixed-point setup: corruption off, the filter told so (tiny
# measurement variance), and prediction at the simulation rate so the
# filter's discrete map is exactly the simulator's. With the standard
# noise assumptions the two-frame finite-difference init leaks a
# velocity transient into the friction state instead.
QUIET = MINI + """
[corruption]
sigma_p = 0
sigma_r_deg = 0
outlier_rate = 0
miss_rate = 0

[filter]
predict_rate = 240

[noise]
q_p = 1e-9
q_r = 1e-9
"""


def test_resolve_workers_precedence(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert resolve_workers() == 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2  # explicit flag beats the environment


def test_resolve_workers_rejects_bad(monkeypatch):
    with pytest.raises(ConfigError):
        resolve_workers(0)
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigError, match=WORKERS_ENV):
        resolve_workers()
    monkeypatch.setenv(WORKERS_ENV, "-2")
    with pytest.raises(ConfigError):
        resolve_workers()


def test_normalize_multipliers():
    pairs = normalize_multipliers(DEFAULT_MULTIPLIERS)
    assert [label for label, _ in pairs] == ["0.0", "0.5", "1.0", "2.0", "mean"]
    assert pairs[-1][1] is None
    assert pairs[2][1] == 1.0
    assert normalize_multipliers([2])[0][0] == "2.0"

    with pytest.raises(ConfigError, match="negative"):
        normalize_multipliers([-0.5])
    with pytest.raises(ConfigError, match="duplicate"):
        normalize_multipliers([1.0, 1])
    with pytest.raises(ConfigError, match="no friction multipliers"):
        normalize_multipliers([])
    with pytest.raises(ConfigError):
        normalize_multipliers(["average"])


def test_sweep_theta0():
    scenario = sample_scenario(3)
    mu = scenario.mu_combined
    assert sweep_theta0(scenario, 0.0) == 0.0
    assert sweep_theta0(scenario, 1.0) == pytest.approx(np.sqrt(mu), abs=1e-15)
    assert sweep_theta0(scenario, 4.0) == pytest.approx(2 * np.sqrt(mu), rel=1e-12)
    assert sweep_theta0(scenario, None) == pytest.approx(
        np.sqrt(MEAN_SUITE_FRICTION), abs=1e-15
    )


def test_run_suite_structure():
    config = config_from_string(MINI)
    report = run_suite(config, with_prediction=True)

    assert report.seeds == (0, 1)
    assert [s.seed for s in report.sequences] == [0, 1]
    assert report.recall_thresholds == (0.01, 0.05, 0.1)
    for curve in (report.filter_recall, report.observation_recall):
        assert curve.shape == (3,)
        assert np.all((curve >= 0.0) & (curve <= 1.0))
        assert np.all(np.diff(curve) >= 0.0)

    series = report.series("filter", 10, "position")
    assert series.shape == (2,)
    assert np.all(np.isfinite(series)) and np.all(series >= 0.0)
    agg = report.aggregate_errors("filter", 10, "position")
    assert agg.n == 2 and agg.q1 <= agg.median <= agg.q3

    for seq in report.sequences:
        assert set(seq.filter_by_cut) == {0, 10}
        assert set(seq.prediction_by_cut) == {10}
        assert seq.gating.n_offered == seq.gating.n_accepted + seq.gating.n_rejected
        assert seq.outliers_offered + seq.clean_offered == seq.gating.n_offered
        assert 0.0 < seq.mu_gt < 0.2 * 0.5 + 1e-12

    totals = report.pooled_gating()
    assert totals["offered"] == sum(s.gating.n_offered for s in report.sequences)
    assert totals["accepted"] + totals["rejected"] == totals["offered"]


def test_run_suite_parallel_matches_serial():
    config = config_from_string(MINI)
    serial = run_suite(config, workers=1)
    parallel = run_suite(config, workers=2)
    assert np.array_equal(serial.filter_recall, parallel.filter_recall)
    for cut in (0, 10):
        for metric in ("position", "rotation", "friction"):
            assert np.array_equal(
                serial.series("filter", cut, metric),
                parallel.series("filter", cut, metric),
            )
    assert [s.terminal_friction_error for s in serial.sequences] == [
        s.terminal_friction_error for s in parallel.sequences
    ]


def test_sweep_fixed_point_and_trend():
    """Noise-free run initialized at the true friction must stay there."""
    config = config_from_string(QUIET)
    report = friction_sweep(config, multipliers=(0.0, 1.0))

    assert report.labels == ("0.0", "1.0")
    assert [(e.label, e.seed) for e in report.entries] == [
        ("0.0", 0), ("0.0", 1), ("1.0", 0), ("1.0", 1)]
    for entry in report.entries:
        scenario = sample_scenario(entry.seed)
        want = 0.0 if entry.label == "0.0" else np.sqrt(scenario.mu_combined)
        assert entry.theta0 == pytest.approx(want, abs=1e-15)
        if entry.label == "1.0":
            assert entry.final_mu == pytest.approx(scenario.mu_combined, abs=1e-3)
        else:
            # Starting from zero the filter must move toward the true value.
            assert entry.terminal_error < scenario.mu_combined

    matched = report.terminal_errors("1.0")
    assert np.all(matched < 1e-3)
    assert report.aggregate_terminal("1.0").median <= report.aggregate_terminal("0.0").median
