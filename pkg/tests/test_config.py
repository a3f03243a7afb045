"""Experiment config parsing, validation diagnostics, shipped presets."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from ekfphys.errors import ConfigError
from ekfphys.harness.config import (
    PRESET_NAMES,
    ExperimentConfig,
    config_from_string,
    load_config,
    load_preset,
)


def test_defaults_match_synthetic_preset():
    assert ExperimentConfig() == load_preset("synthetic_ekfphys")


def test_preset_values():
    synth = load_preset("synthetic_ekfphys")
    assert synth.mode == "ekfphys"
    assert synth.theta0 == 0.0
    assert (synth.sigma0_p, synth.sigma0_r, synth.sigma0_v, synth.sigma0_w) == (
        88.253,
        0.00469,
        549.57,
        0.260,
    )
    assert synth.sigma0_theta == 0.07372
    assert (synth.s_motion, synth.s_theta) == (0.00011, 3.49e-6)
    assert (synth.q_p, synth.q_r, synth.zeta) == (0.00025, 0.00092, 340.0)

    synth_f = load_preset("synthetic_ekfphys_f")
    assert synth_f.mode == "ekfphys-f"
    assert synth_f.theta0 == pytest.approx(np.sqrt(0.06), abs=1e-15)
    assert (synth_f.sigma0_p, synth_f.sigma0_r, synth_f.sigma0_v, synth_f.sigma0_w) == (
        3.68122,
        0.26089,
        0.00011,
        209.502,
    )
    assert synth_f.sigma0_theta == 0.0 and synth_f.s_theta == 0.0
    assert (synth_f.s_motion, synth_f.q_p, synth_f.q_r, synth_f.zeta) == (
        0.0078,
        0.00018,
        0.00021,
        160.0,
    )

    real = load_preset("real_ekfphys")
    assert (real.sigma0_p, real.sigma0_r, real.sigma0_v, real.sigma0_w) == (
        0.0138,
        1.0902,
        546.27,
        246.794,
    )
    assert real.sigma0_theta == 0.21
    assert (real.s_motion, real.s_theta) == (3.549e-5, 2.47e-5)
    assert (real.q_p, real.q_r, real.zeta) == (6.91e-5, 0.2, 460.0)

    real_f = load_preset("real_ekfphys_f")
    assert (real_f.sigma0_p, real_f.sigma0_r, real_f.sigma0_v, real_f.sigma0_w) == (
        5.13,
        47.6,
        12.93,
        141.8,
    )
    assert (real_f.s_motion, real_f.q_p, real_f.q_r, real_f.zeta) == (
        0.0012,
        1.12e-5,
        0.0005,
        120.0,
    )


def test_all_presets_load():
    for name in PRESET_NAMES:
        config = load_preset(name)
        assert config.noise_config().zeta == config.zeta
    with pytest.raises(ConfigError, match="unknown preset"):
        load_preset("imaginary")


def test_seed_syntax():
    assert config_from_string("[scenario]\nseeds = 0:5\n").seeds == (0, 1, 2, 3, 4)
    assert config_from_string("[scenario]\nseeds = 3,5,9\n").seeds == (3, 5, 9)
    assert config_from_string("[scenario]\nseeds = 7\n").seeds == (7,)
    with pytest.raises(ConfigError, match="seeds"):
        config_from_string("[scenario]\nseeds = 5:5\n")
    with pytest.raises(ConfigError, match="nonnegative"):
        config_from_string("[scenario]\nseeds = -1,2\n")


def test_unknown_section_and_key_diagnostics():
    with pytest.raises(ConfigError, match=r"unknown section \[warp\]"):
        config_from_string("[warp]\nx = 1\n", origin="my.cfg")
    with pytest.raises(ConfigError, match=r"my.cfg: \[noise\] has no key 'zeta_typo'"):
        config_from_string("[noise]\nzeta_typo = 3\n", origin="my.cfg")


def test_bad_value_diagnostics_name_field():
    with pytest.raises(ConfigError, match=r"\[noise\] zeta = 'soft'"):
        config_from_string("[noise]\nzeta = soft\n")
    with pytest.raises(ConfigError, match="duration"):
        config_from_string("[scenario]\nduration = -1\n")


def test_parse_error_carries_line_number():
    with pytest.raises(ConfigError, match="line"):
        config_from_string("[scenario]\nthis line has no equals sign\n")


def test_rate_divisibility_invariant():
    with pytest.raises(ConfigError, match="integer multiple"):
        config_from_string("[scenario]\nsim_rate = 100\n")
    with pytest.raises(ConfigError, match="integer multiple"):
        config_from_string("[filter]\npredict_rate = 45\n")
    config = config_from_string("[filter]\npredict_rate = 90\n")
    assert config.predict_rate == 90.0


def test_cut_points_within_sequence():
    with pytest.raises(ConfigError, match="cut_frames"):
        config_from_string("[evaluation]\ncut_frames = 0,90\n")  # 90 frames: max index 89
    with pytest.raises(ConfigError, match="predict_cut_frames"):
        config_from_string(
            "[scenario]\nduration = 1.0\n\n"
            "[evaluation]\ncut_frames = 0,10\npredict_cut_frames = 0,40\n"
        )
    config = config_from_string("[evaluation]\ncut_frames = 0,89\n")
    assert config.cut_frames == (0, 89)


def test_mode_and_rates_validation():
    with pytest.raises(ConfigError, match="mode"):
        config_from_string("[filter]\nmode = kalman\n")
    with pytest.raises(ConfigError, match="miss_rate"):
        config_from_string("[corruption]\nmiss_rate = 1.5\n")
    with pytest.raises(ConfigError, match="sigma0_p"):
        config_from_string("[noise]\nsigma0_p = 0\n")


def test_replace_revalidates():
    config = ExperimentConfig()
    with pytest.raises(ConfigError):
        dataclasses.replace(config, mode="bogus")


def test_sigma_r_converts_degrees():
    config = config_from_string("[corruption]\nsigma_r_deg = 0.5\n")
    assert config.sigma_r == pytest.approx(np.deg2rad(0.5), rel=1e-12)


def test_n_frames():
    assert ExperimentConfig().n_frames == 90
    short = config_from_string(
        "[scenario]\nduration = 1.0\n\n"
        "[evaluation]\ncut_frames = 0,10\npredict_cut_frames = 10\n"
    )
    assert short.n_frames == 30


def test_resolved_items_cover_every_field_in_order():
    config = ExperimentConfig()
    items = config.resolved_items()
    keys = [key for _, key, _ in items]
    assert len(keys) == len(set(keys)) == len(dataclasses.fields(config))
    assert keys[0] == "kind"
    by_key = {key: (section, value) for section, key, value in items}
    assert by_key["zeta"] == ("noise", "340.0")
    assert by_key["seeds"][1] == ",".join(str(s) for s in range(20))
    assert by_key["cut_frames"] == ("evaluation", "0,15,30,45,60,75")


def test_load_config_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/path.cfg")


def test_inline_comments_stripped():
    config = config_from_string("[noise]\nzeta = 25.0  # loose gate\n")
    assert config.zeta == 25.0
