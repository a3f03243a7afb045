"""On-disk exchange formats: JSON Lines trajectories, scenario files, CSV tables.

Every writer is deterministic: floats are rendered with ``repr`` (shortest
round-trip form), orderings are fixed, and no timestamps or absolute paths
enter the output. Rerunning a pipeline with the same seeds therefore
reproduces every file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dynamics.shapes import Box, Sphere
from ..ekf import FilterResult, ObservationFrame
from ..errors import ConfigError
from ..liegroup import FilterState, Pose, Rotation, Twist
from ..synth import (
    BodyTrajectory,
    GroundTruthTrajectory,
    ObservationLog,
    Scenario,
    ScenarioObject,
)

__all__ = [
    "SCHEMA_VERSION",
    "BeliefRow",
    "BeliefTrajectory",
    "config_header",
    "read_beliefs",
    "read_csv",
    "read_ground_truth",
    "read_observations",
    "read_scenario",
    "write_beliefs",
    "write_csv",
    "write_ground_truth",
    "write_observations",
    "write_scenario",
]

SCHEMA_VERSION = "ekfphys-report-v1"

_GT_FORMAT = "gt-v1"
_OBS_FORMAT = "obs-v1"
_BELIEF_FORMAT = "beliefs-v1"


def _fnum(x: float) -> str:
    """Shortest exact decimal form of a float."""
    return repr(float(x))


def _join(vec) -> str:
    return ",".join(_fnum(c) for c in np.asarray(vec, dtype=float))


def _split(text: str, n: int, where: str) -> np.ndarray:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != n:
        raise ConfigError(f"{where}: expected {n} comma-separated numbers, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _stored_rotation(q, where: str) -> Rotation:
    """Rebuild a rotation from stored components without moving their bits."""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise ConfigError(f"{where}: quaternion must be 4 finite numbers")
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > 1e-9:
        raise ConfigError(f"{where}: quaternion norm {norm} is not 1")
    return Rotation.from_unit_quat(q)


def _read_jsonl(path: Path, expected_format: str):
    """Yield (meta, records-iterator); validates the leading meta line."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty file")
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:1: {exc}") from exc
    meta = head.get("meta") if isinstance(head, dict) else None
    if meta is None or meta.get("format") != expected_format:
        raise ConfigError(f"{path}: expected a {expected_format!r} meta line first")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return meta, records


# ---------------------------------------------------------------------------
# scenario files (same flat key-value format as experiment configs)


def write_scenario(path, scenario: Scenario) -> None:
    lines = [
        "[scenario]",
        f"kind = {scenario.kind}",
        f"seed = {scenario.seed}",
        f"duration = {_fnum(scenario.duration)}",
        f"background_friction = {_fnum(scenario.background_friction)}",
        "",
    ]
    for i, obj in enumerate(scenario.objects):
        lines.append(f"[object{i}]")
        lines.append(f"name = {obj.name}")
        if isinstance(obj.shape, Box):
            lines.append("shape = box")
            lines.append(f"half_extents = {_join(obj.shape.half_extents)}")
        elif isinstance(obj.shape, Sphere):
            lines.append("shape = sphere")
            lines.append(f"radius = {_fnum(obj.shape.radius)}")
        else:
            raise ValueError(f"cannot serialize shape {type(obj.shape).__name__}")
        lines.append(f"mass = {_fnum(obj.mass)}")
        lines.append(f"friction = {_fnum(obj.friction)}")
        lines.append(f"p = {_join(obj.pose.p)}")
        lines.append(f"q = {_join(obj.pose.R.quat)}")
        lines.append(f"v = {_join(obj.twist.v)}")
        lines.append(f"w = {_join(obj.twist.omega)}")
        lines.append("")
    Path(path).write_text("\n".join(lines))


def _req(section, key: str, where: str) -> str:
    if key not in section:
        raise ConfigError(f"{where}: missing key '{key}'")
    return section[key]


def read_scenario(path) -> Scenario:
    import configparser

    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(Path(path).read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if "scenario" not in cp:
        raise ConfigError(f"{path}: missing [scenario] section")
    sc = cp["scenario"]
    where = f"{path}: [scenario]"
    try:
        kind = _req(sc, "kind", where)
        seed = int(_req(sc, "seed", where))
        duration = float(_req(sc, "duration", where))
        background = float(_req(sc, "background_friction", where))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc

    objects = []
    for i in range(len(cp.sections()) - 1):
        name = f"object{i}"
        if name not in cp:
            raise ConfigError(f"{path}: object sections must be contiguous, missing [{name}]")
        sec = cp[name]
        where = f"{path}: [{name}]"
        try:
            shape_kind = _req(sec, "shape", where)
            if shape_kind == "box":
                shape = Box(_split(_req(sec, "half_extents", where), 3, where))
            elif shape_kind == "sphere":
                shape = Sphere(float(_req(sec, "radius", where)))
            else:
                raise ConfigError(f"{where}: unknown shape {shape_kind!r}")
            objects.append(
                ScenarioObject(
                    name=_req(sec, "name", where),
                    shape=shape,
                    mass=float(_req(sec, "mass", where)),
                    friction=float(_req(sec, "friction", where)),
                    pose=Pose(
                        _split(_req(sec, "p", where), 3, where),
                        _stored_rotation(_split(_req(sec, "q", where), 4, where), where),
                    ),
                    twist=Twist(
                        _split(_req(sec, "w", where), 3, where),
                        _split(_req(sec, "v", where), 3, where),
                    ),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    if not objects:
        raise ConfigError(f"{path}: no object sections")
    return Scenario(
        objects=tuple(objects),
        background_friction=background,
        duration=duration,
        seed=seed,
        kind=kind,
    )


# ---------------------------------------------------------------------------
# ground truth


def write_ground_truth(path, gt: GroundTruthTrajectory) -> None:
    """One record per body per simulation step, step-major."""
    meta = {
        "meta": {
            "format": _GT_FORMAT,
            "sim_rate": float(gt.sim_rate),
            "bodies": len(gt.bodies),
            "steps": int(len(gt.times)),
        }
    }
    lines = [_dumps(meta)]
    for k in range(len(gt.times)):
        t = float(gt.times[k])
        for i, traj in enumerate(gt.bodies):
            lines.append(
                _dumps(
                    {
                        "t": t,
                        "body": i,
                        "p": traj.p[k].tolist(),
                        "q": traj.quat[k].tolist(),
                        "v": traj.v[k].tolist(),
                        "w": traj.omega[k].tolist(),
                    }
                )
            )
    Path(path).write_text("\n".join(lines) + "\n")


def read_ground_truth(path, scenario: Scenario) -> GroundTruthTrajectory:
    meta, records = _read_jsonl(Path(path), _GT_FORMAT)
    nb, n = int(meta["bodies"]), int(meta["steps"])
    if nb != len(scenario.objects):
        raise ConfigError(
            f"{path}: {nb} bodies in trajectory but {len(scenario.objects)} in scenario"
        )
    if len(records) != nb * n:
        raise ConfigError(f"{path}: expected {nb * n} records, found {len(records)}")
    times = np.zeros(n)
    p = np.zeros((nb, n, 3))
    quat = np.zeros((nb, n, 4))
    v = np.zeros((nb, n, 3))
    omega = np.zeros((nb, n, 3))
    for j, rec in enumerate(records):
        k, i = divmod(j, nb)
        if rec["body"] != i:
            raise ConfigError(f"{path}: record {j} out of order (body {rec['body']})")
        times[k] = rec["t"]
        p[i, k] = rec["p"]
        quat[i, k] = rec["q"]
        v[i, k] = rec["v"]
        omega[i, k] = rec["w"]
    return GroundTruthTrajectory(
        times=times,
        bodies=tuple(BodyTrajectory(p[i], quat[i], v[i], omega[i]) for i in range(nb)),
        scenario=scenario,
        sim_rate=float(meta["sim_rate"]),
    )


# ---------------------------------------------------------------------------
# observations


def write_observations(path, log: ObservationLog) -> None:
    meta = {
        "meta": {
            "format": _OBS_FORMAT,
            "sigma_p": float(log.sigma_p),
            "sigma_r": float(log.sigma_r),
            "outlier_rate": float(log.outlier_rate),
            "miss_rate": float(log.miss_rate),
            "seed": int(log.seed),
            "obs_rate": float(log.obs_rate),
            "outlier_frames": [int(i) for i in log.outlier_frames],
            "missed_frames": [int(i) for i in log.missed_frames],
        }
    }
    lines = [_dumps(meta)]
    for f in log.frames:
        rec = {"t": float(f.t), "valid": f.valid}
        rec["p"] = f.pose.p.tolist() if f.valid else None
        rec["q"] = f.pose.R.quat.tolist() if f.valid else None
        lines.append(_dumps(rec))
    Path(path).write_text("\n".join(lines) + "\n")


def read_observations(path) -> ObservationLog:
    meta, records = _read_jsonl(Path(path), _OBS_FORMAT)
    frames = []
    for rec in records:
        if rec["valid"]:
            pose = Pose(np.array(rec["p"], dtype=float), _stored_rotation(rec["q"], str(path)))
        else:
            pose = None
        frames.append(ObservationFrame(t=float(rec["t"]), pose=pose))
    return ObservationLog(
        frames=tuple(frames),
        outlier_frames=tuple(int(i) for i in meta["outlier_frames"]),
        missed_frames=tuple(int(i) for i in meta["missed_frames"]),
        sigma_p=float(meta["sigma_p"]),
        sigma_r=float(meta["sigma_r"]),
        outlier_rate=float(meta["outlier_rate"]),
        miss_rate=float(meta["miss_rate"]),
        seed=int(meta["seed"]),
        obs_rate=float(meta["obs_rate"]),
    )


# ---------------------------------------------------------------------------
# belief trajectories


@dataclass(frozen=True)
class BeliefRow:
    """Posterior mean at one observation frame."""

    frame: int
    t: float
    state: FilterState
    accepted: bool | None
    gate: float | None


@dataclass(frozen=True)
class BeliefTrajectory:
    """Filter output on the observation frame grid, ready for metrics or disk."""

    rows: tuple[BeliefRow, ...]
    mode: str
    theta0: float
    init_frame: int
    obs_rate: float

    @classmethod
    def from_filter_result(
        cls, result: FilterResult, mode: str, theta0: float, obs_rate: float
    ) -> "BeliefTrajectory":
        rows = tuple(
            BeliefRow(r.frame, r.t, r.belief.mean, r.accepted, r.gate) for r in result.records
        )
        return cls(rows, mode, float(theta0), result.init_frame, float(obs_rate))


def write_beliefs(path, beliefs: BeliefTrajectory) -> None:
    meta = {
        "meta": {
            "format": _BELIEF_FORMAT,
            "mode": beliefs.mode,
            "theta0": float(beliefs.theta0),
            "init_frame": int(beliefs.init_frame),
            "obs_rate": float(beliefs.obs_rate),
        }
    }
    lines = [_dumps(meta)]
    for row in beliefs.rows:
        s = row.state
        lines.append(
            _dumps(
                {
                    "frame": int(row.frame),
                    "t": float(row.t),
                    "p": s.p.tolist(),
                    "q": s.R.quat.tolist(),
                    "v": s.v.tolist(),
                    "w": s.omega.tolist(),
                    "theta": float(s.theta),
                    "accepted": row.accepted,
                    "gate": None if row.gate is None else float(row.gate),
                }
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_beliefs(path) -> BeliefTrajectory:
    meta, records = _read_jsonl(Path(path), _BELIEF_FORMAT)
    rows = []
    for rec in records:
        state = FilterState(
            p=np.array(rec["p"], dtype=float),
            R=_stored_rotation(rec["q"], str(path)),
            v=np.array(rec["v"], dtype=float),
            omega=np.array(rec["w"], dtype=float),
            theta=float(rec["theta"]),
        )
        gate = rec["gate"]
        rows.append(
            BeliefRow(
                frame=int(rec["frame"]),
                t=float(rec["t"]),
                state=state,
                accepted=rec["accepted"],
                gate=None if gate is None else float(gate),
            )
        )
    return BeliefTrajectory(
        rows=tuple(rows),
        mode=str(meta["mode"]),
        theta0=float(meta["theta0"]),
        init_frame=int(meta["init_frame"]),
        obs_rate=float(meta["obs_rate"]),
    )


# ---------------------------------------------------------------------------
# CSV tables


def _cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return _fnum(x)
    text = str(x)
    if "," in text or "\n" in text or "#" in text:
        raise ValueError(f"CSV cell may not contain separators: {text!r}")
    return text


def config_header(config) -> list[tuple[str, str]]:
    """Reproducibility header items for a resolved experiment config."""
    return [(f"config.{sec}.{key}", value) for sec, key, value in config.resolved_items()]


def write_csv(path, columns, rows, header_items=()) -> None:
    """Comment header (schema + reproducibility items), one header row, data rows."""
    lines = [f"# schema={SCHEMA_VERSION}"]
    for key, value in header_items:
        lines.append(f"# {key}={value}")
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row width {len(row)} != {len(columns)} columns")
        lines.append(",".join(_cell(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Returns (header dict, column names, rows of strings)."""
    header: dict[str, str] = {}
    columns: list[str] | None = None
    rows: list[list[str]] = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                header[key.strip()] = value
            continue
        if columns is None:
            columns = line.split(",")
        else:
            rows.append(line.split(","))
    if columns is None:
        raise ConfigError(f"{path}: no header row")
    return header, columns, rows
