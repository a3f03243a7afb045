"""Experiment configuration: a flat INI file validated into a typed record.

Sections group the pipeline stages (scenario, corruption, filter, noise,
evaluation). Unknown sections or keys and unparseable values raise
ConfigError with the offending location, so a typo fails fast instead of
silently running with defaults. Field defaults reproduce the synthetic
friction-estimating preset; the other three presets ship as package data.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from ..ekf import NoiseConfig
from ..errors import ConfigError

__all__ = [
    "PRESET_NAMES",
    "ExperimentConfig",
    "config_from_string",
    "load_config",
    "load_preset",
]

PRESET_NAMES = (
    "synthetic_ekfphys",
    "synthetic_ekfphys_f",
    "real_ekfphys",
    "real_ekfphys_f",
)

_DEG = 0.017453292519943295  # radians per degree


def _parse_seeds(text: str) -> tuple[int, ...]:
    """Seed lists: 'a:b' for range(a, b), otherwise comma-separated values."""
    text = text.strip()
    if ":" in text:
        lo_text, _, hi_text = text.partition(":")
        lo, hi = int(lo_text), int(hi_text)
        if hi <= lo:
            raise ValueError(f"empty seed range {text!r}")
        return tuple(range(lo, hi))
    return tuple(int(p) for p in text.split(",") if p.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _fmt_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_fmt_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    # [scenario]
    kind: str = "single"
    seeds: tuple[int, ...] = tuple(range(20))
    duration: float = 3.0
    sim_rate: float = 240.0
    # [corruption]
    sigma_p: float = 0.001
    sigma_r_deg: float = 0.5
    outlier_rate: float = 0.03
    miss_rate: float = 0.05
    seed_offset: int = 10000
    # [filter]
    mode: str = "ekfphys"
    theta0: float = 0.0
    predict_rate: float = 60.0
    obs_rate: float = 30.0
    # [noise]
    sigma0_p: float = 88.253
    sigma0_r: float = 0.00469
    sigma0_v: float = 549.57
    sigma0_w: float = 0.260
    sigma0_theta: float = 0.07372
    s_motion: float = 0.00011
    s_theta: float = 3.49e-6
    q_p: float = 0.00025
    q_r: float = 0.00092
    zeta: float = 340.0
    theta_floor: float = 0.05
    # [evaluation]
    cut_frames: tuple[int, ...] = (0, 15, 30, 45, 60, 75)
    predict_cut_frames: tuple[int, ...] = (0, 15, 30, 45, 60, 75)
    recall_thresholds: tuple[float, ...] = (
        0.005,
        0.01,
        0.02,
        0.03,
        0.05,
        0.075,
        0.1,
        0.15,
        0.2,
    )

    def __post_init__(self):
        self._validate()

    def _validate(self) -> None:
        def fail(message: str):
            raise ConfigError(message)

        if self.kind not in ("single", "two_object"):
            fail(f"scenario.kind must be 'single' or 'two_object', got {self.kind!r}")
        if not self.seeds:
            fail("scenario.seeds is empty")
        if any(s < 0 for s in self.seeds):
            fail("scenario.seeds must be nonnegative")
        if self.duration <= 0.0:
            fail(f"scenario.duration must be positive, got {self.duration}")
        for name in ("sim_rate", "predict_rate", "obs_rate"):
            if getattr(self, name) <= 0.0:
                fail(f"filter.{name} must be positive")
        for name in ("sim_rate", "predict_rate"):
            ratio = getattr(self, name) / self.obs_rate
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                fail(
                    f"{name} ({getattr(self, name)}) must be an integer multiple "
                    f"of obs_rate ({self.obs_rate})"
                )
        for name in ("sigma_p", "sigma_r_deg"):
            if getattr(self, name) < 0.0:
                fail(f"corruption.{name} must be nonnegative")
        for name in ("outlier_rate", "miss_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                fail(f"corruption.{name} must lie in [0, 1], got {rate}")
        if self.mode not in ("ekfphys", "ekfphys-f"):
            fail(f"filter.mode must be 'ekfphys' or 'ekfphys-f', got {self.mode!r}")
        for name in ("sigma0_p", "sigma0_r", "sigma0_v", "sigma0_w", "s_motion", "q_p", "q_r"):
            if getattr(self, name) <= 0.0:
                fail(f"noise.{name} must be positive")
        for name in ("sigma0_theta", "s_theta"):
            if getattr(self, name) < 0.0:
                fail(f"noise.{name} must be nonnegative")
        if self.zeta <= 0.0:
            fail("noise.zeta must be positive")
        if self.theta_floor <= 0.0:
            fail("noise.theta_floor must be positive")
        n = self.n_frames
        for name in ("cut_frames", "predict_cut_frames"):
            cuts = getattr(self, name)
            if not cuts:
                fail(f"evaluation.{name} is empty")
            if any(c < 0 or c >= n for c in cuts):
                fail(f"evaluation.{name} must lie in [0, {n - 1}] for {n} frames: {cuts}")
            if tuple(sorted(cuts)) != cuts:
                fail(f"evaluation.{name} must be sorted ascending")
        thresholds = self.recall_thresholds
        if not thresholds or any(t <= 0.0 for t in thresholds):
            fail("evaluation.recall_thresholds must be positive")
        if tuple(sorted(thresholds)) != thresholds:
            fail("evaluation.recall_thresholds must be sorted ascending")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.obs_rate))

    @property
    def sigma_r(self) -> float:
        """Observation rotation noise in radians."""
        return self.sigma_r_deg * _DEG

    def noise_config(self) -> NoiseConfig:
        return NoiseConfig(
            sigma0_p=self.sigma0_p,
            sigma0_r=self.sigma0_r,
            sigma0_v=self.sigma0_v,
            sigma0_w=self.sigma0_w,
            sigma0_theta=self.sigma0_theta,
            s_motion=self.s_motion,
            s_theta=self.s_theta,
            q_p=self.q_p,
            q_r=self.q_r,
            zeta=self.zeta,
            theta_floor=self.theta_floor,
        )

    def resolved_items(self) -> tuple[tuple[str, str, str], ...]:
        """(section, key, formatted value) for every field, in schema order."""
        return tuple(
            (section, key, _fmt_value(getattr(self, key)))
            for section, keys in _SCHEMA.items()
            for key in keys
        )


_SCHEMA: dict[str, dict[str, object]] = {
    "scenario": {
        "kind": str,
        "seeds": _parse_seeds,
        "duration": float,
        "sim_rate": float,
    },
    "corruption": {
        "sigma_p": float,
        "sigma_r_deg": float,
        "outlier_rate": float,
        "miss_rate": float,
        "seed_offset": int,
    },
    "filter": {
        "mode": str,
        "theta0": float,
        "predict_rate": float,
        "obs_rate": float,
    },
    "noise": {
        "sigma0_p": float,
        "sigma0_r": float,
        "sigma0_v": float,
        "sigma0_w": float,
        "sigma0_theta": float,
        "s_motion": float,
        "s_theta": float,
        "q_p": float,
        "q_r": float,
        "zeta": float,
        "theta_floor": float,
    },
    "evaluation": {
        "cut_frames": _parse_int_list,
        "predict_cut_frames": _parse_int_list,
        "recall_thresholds": _parse_float_list,
    },
}

assert {key for keys in _SCHEMA.values() for key in keys} == {
    f.name for f in fields(ExperimentConfig)
}


def config_from_string(text: str, origin: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    overrides = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            known = ", ".join(_SCHEMA)
            raise ConfigError(f"{origin}: unknown section [{section}] (known: {known})")
        for key, raw in cp[section].items():
            converter = _SCHEMA[section].get(key)
            if converter is None:
                known = ", ".join(_SCHEMA[section])
                raise ConfigError(
                    f"{origin}: [{section}] has no key '{key}' (known: {known})"
                )
            try:
                overrides[key] = converter(raw)
            except ValueError as exc:
                raise ConfigError(f"{origin}: [{section}] {key} = {raw!r}: {exc}") from exc
    try:
        return ExperimentConfig(**overrides)
    except ConfigError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_string(text, origin=str(path))


def load_preset(name: str) -> ExperimentConfig:
    """Load one of the shipped parameter presets by name."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r} (known: {', '.join(PRESET_NAMES)})")
    text = resources.files("ekfphys").joinpath(f"presets/{name}.cfg").read_text()
    return config_from_string(text, origin=f"preset:{name}")
