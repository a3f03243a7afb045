"""Synthetic data: scenario sampling, ground-truth simulation, corruption.

Scenarios place an object (or two) upright on a ground plane, sliding
toward the center, and simulate at 240 Hz for 3 s; a 30 Hz observation
stream is produced by picking exact simulation steps (no interpolation)
and corrupting poses with local Gaussian noise, gross outliers, and
missed frames. Everything is a deterministic function of the seeds.

The rng draw order inside :func:`sample_scenario` and :func:`corrupt`
is frozen: changing it silently changes every downstream result.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .dynamics import Box, Plane, RigidBody, SimParams, World, step
from .ekf import ObservationFrame
from .liegroup import Pose, Rotation, Twist, exp_so3

__all__ = [
    "ScenarioObject",
    "Scenario",
    "BodyTrajectory",
    "GroundTruthTrajectory",
    "ObservationLog",
    "load_object_catalog",
    "sample_scenario",
    "make_world",
    "simulate_ground_truth",
    "corrupt",
]

GROUND_PLANE = Plane([0.0, 0.0, 1.0])
BACKGROUND_FRICTION = 0.2
DEFAULT_DURATION = 3.0
DEFAULT_SIM_RATE = 240.0
DEFAULT_OBS_RATE = 30.0

# chunky stand-ins for the catalog objects; stable under the sampled spins
_TRACKED_NAME = "sugar_box"
_TRACKED_HALF_EXTENTS = (0.04, 0.06, 0.09)
_CENTER_NAME = "potted_meat_can"
_CENTER_HALF_EXTENTS = (0.025, 0.048, 0.041)


def load_object_catalog() -> dict[str, dict]:
    """Name-keyed object catalog (id, mass in kg, friction coefficient)."""
    text = resources.files("ekfphys.data").joinpath("ycb_objects.json").read_text()
    return {entry["name"]: entry for entry in json.loads(text)["objects"]}


@dataclass(frozen=True)
class ScenarioObject:
    name: str
    shape: object
    mass: float
    friction: float
    pose: Pose
    twist: Twist


@dataclass(frozen=True)
class Scenario:
    """Deterministic scene description; index 0 is the tracked object."""

    objects: tuple[ScenarioObject, ...]
    background_friction: float
    duration: float
    seed: int
    kind: str

    @property
    def mu_combined(self) -> float:
        return self.background_friction * self.objects[0].friction

    @property
    def theta_gt(self) -> float:
        return float(np.sqrt(self.mu_combined))


def sample_scenario(seed: int, kind: str = "single") -> Scenario:
    """Draw a sliding scenario.

    The tracked object starts upright at radius U[0.3, 0.4] m, random
    yaw, aimed at a point on a circle around the center (0.1 m radius;
    0.02 m with a second, static object there), with speed U[0.5, 1.0],
    spin U[2, 3] rad/s about +-z, and friction U[0.1, 0.5] against a
    0.2-friction background.
    """
    if kind not in ("single", "two_object"):
        raise ValueError(f"unknown scenario kind: {kind!r}")
    rng = np.random.default_rng(seed)
    catalog = load_object_catalog()

    radius = rng.uniform(0.3, 0.4)
    pos_angle = rng.uniform(-np.pi, np.pi)
    yaw = rng.uniform(-np.pi, np.pi)
    speed = rng.uniform(0.5, 1.0)
    target_angle = rng.uniform(-np.pi, np.pi)
    omega_mag = rng.uniform(2.0, 3.0)
    omega_sign = 1.0 if rng.random() < 0.5 else -1.0
    mu_obj = rng.uniform(0.1, 0.5)

    target_radius = 0.02 if kind == "two_object" else 0.1
    half = np.array(_TRACKED_HALF_EXTENTS)
    p0 = np.array([radius * np.cos(pos_angle), radius * np.sin(pos_angle), half[2]])
    target = target_radius * np.array([np.cos(target_angle), np.sin(target_angle), 0.0])
    direction = target - np.array([p0[0], p0[1], 0.0])
    direction = direction / np.linalg.norm(direction)
    tracked = ScenarioObject(
        name=_TRACKED_NAME,
        shape=Box(half),
        mass=catalog[_TRACKED_NAME]["mass"],
        friction=mu_obj,
        pose=Pose(p0, exp_so3([0.0, 0.0, yaw])),
        twist=Twist(np.array([0.0, 0.0, omega_sign * omega_mag]), speed * direction),
    )
    objects = [tracked]
    if kind == "two_object":
        yaw2 = rng.uniform(-np.pi, np.pi)
        mu2 = rng.uniform(0.1, 0.5)
        half2 = np.array(_CENTER_HALF_EXTENTS)
        objects.append(
            ScenarioObject(
                name=_CENTER_NAME,
                shape=Box(half2),
                mass=catalog[_CENTER_NAME]["mass"],
                friction=mu2,
                pose=Pose(np.array([0.0, 0.0, half2[2]]), exp_so3([0.0, 0.0, yaw2])),
                twist=Twist.zero(),
            )
        )
    return Scenario(
        objects=tuple(objects),
        background_friction=BACKGROUND_FRICTION,
        duration=DEFAULT_DURATION,
        seed=seed,
        kind=kind,
    )


def make_world(scenario: Scenario, params: SimParams | None = None) -> World:
    bodies = tuple(
        RigidBody.from_shape(o.shape, o.mass, o.pose, o.twist) for o in scenario.objects
    )
    return World(bodies, (GROUND_PLANE,), params if params is not None else SimParams())


@dataclass(frozen=True)
class BodyTrajectory:
    p: np.ndarray  # (n, 3)
    quat: np.ndarray  # (n, 4) scalar-first
    v: np.ndarray  # (n, 3)
    omega: np.ndarray  # (n, 3)


@dataclass(frozen=True)
class GroundTruthTrajectory:
    """Per-step states of every body on a uniform simulation time grid."""

    times: np.ndarray
    bodies: tuple[BodyTrajectory, ...]
    scenario: Scenario
    sim_rate: float

    def pose_at(self, idx: int, body: int = 0) -> Pose:
        traj = self.bodies[body]
        return Pose(traj.p[idx].copy(), Rotation.from_quat(traj.quat[idx]))

    def twist_at(self, idx: int, body: int = 0) -> Twist:
        traj = self.bodies[body]
        return Twist(traj.omega[idx].copy(), traj.v[idx].copy())

    def world_at(self, idx: int, params: SimParams | None = None) -> World:
        bodies = tuple(
            RigidBody.from_shape(o.shape, o.mass, self.pose_at(idx, i), self.twist_at(idx, i))
            for i, o in enumerate(self.scenario.objects)
        )
        return World(bodies, (GROUND_PLANE,), params if params is not None else SimParams())

    def frame_indices(self, obs_rate: float = DEFAULT_OBS_RATE) -> np.ndarray:
        """Simulation-step indices of the output frames (exact steps)."""
        stride = self.sim_rate / obs_rate
        if abs(stride - round(stride)) > 1e-12:
            raise ValueError(
                f"observation rate {obs_rate} does not divide simulation rate {self.sim_rate}"
            )
        n_frames = int(round(self.scenario.duration * obs_rate))
        return int(round(stride)) * np.arange(n_frames)


def simulate_ground_truth(
    scenario: Scenario, sim_rate: float = DEFAULT_SIM_RATE
) -> GroundTruthTrajectory:
    """Simulate the scenario, recording every step; solver failures propagate."""
    world = make_world(scenario)
    theta = scenario.theta_gt
    dt = 1.0 / sim_rate
    n_steps = int(round(scenario.duration * sim_rate))
    nb = len(world.bodies)
    p = np.zeros((nb, n_steps + 1, 3))
    quat = np.zeros((nb, n_steps + 1, 4))
    v = np.zeros((nb, n_steps + 1, 3))
    omega = np.zeros((nb, n_steps + 1, 3))

    def record(k, w):
        for i, body in enumerate(w.bodies):
            p[i, k] = body.pose.p
            quat[i, k] = body.pose.R.quat
            v[i, k] = body.twist.v
            omega[i, k] = body.twist.omega

    record(0, world)
    for k in range(1, n_steps + 1):
        world = step(world, theta, dt).world
        record(k, world)
    return GroundTruthTrajectory(
        times=np.arange(n_steps + 1) / sim_rate,
        bodies=tuple(BodyTrajectory(p[i], quat[i], v[i], omega[i]) for i in range(nb)),
        scenario=scenario,
        sim_rate=sim_rate,
    )


@dataclass(frozen=True)
class ObservationLog:
    """30 Hz detector stand-in. Corruption metadata is for evaluation only."""

    frames: tuple[ObservationFrame, ...]
    outlier_frames: tuple[int, ...]
    missed_frames: tuple[int, ...]
    sigma_p: float
    sigma_r: float
    outlier_rate: float
    miss_rate: float
    seed: int
    obs_rate: float


def corrupt(
    gt: GroundTruthTrajectory,
    seed: int,
    sigma_p: float = 1e-3,
    sigma_r: float = np.deg2rad(0.5),
    outlier_rate: float = 0.03,
    miss_rate: float = 0.05,
    obs_rate: float = DEFAULT_OBS_RATE,
    body: int = 0,
) -> ObservationLog:
    """Downsample and corrupt the tracked body's poses.

    Per frame: small noise is applied via the local parameterization
    (p + dp, exp(dR) R); with probability ``outlier_rate`` the frame is
    replaced by a gross error (position jump U[0.3, 1.0] m, extra
    rotation U[30, 180] degrees); with probability ``miss_rate`` the
    frame is invalid (a miss wins over an outlier). Timestamps and
    frame count are never altered.
    """
    if sigma_p < 0.0 or sigma_r < 0.0:
        raise ValueError("noise sigmas must be nonnegative")
    if not (0.0 <= outlier_rate <= 1.0 and 0.0 <= miss_rate <= 1.0):
        raise ValueError("rates must be in [0, 1]")
    rng = np.random.default_rng(seed)
    indices = gt.frame_indices(obs_rate)
    frames: list[ObservationFrame] = []
    outliers: list[int] = []
    missed: list[int] = []
    for k, idx in enumerate(indices):
        t = float(gt.times[idx])
        pose = gt.pose_at(int(idx), body)
        noise = rng.standard_normal(6)
        u_out = rng.random()
        u_miss = rng.random()
        if u_miss < miss_rate:
            missed.append(k)
            frames.append(ObservationFrame(t, None))
            continue
        if u_out < outlier_rate:
            jump_mag = rng.uniform(0.3, 1.0)
            jump_dir = rng.standard_normal(3)
            jump_dir = jump_dir / np.linalg.norm(jump_dir)
            rot_ang = rng.uniform(np.deg2rad(30.0), np.deg2rad(180.0))
            rot_axis = rng.standard_normal(3)
            rot_axis = rot_axis / np.linalg.norm(rot_axis)
            outliers.append(k)
            frames.append(
                ObservationFrame(
                    t,
                    Pose(pose.p + jump_mag * jump_dir, exp_so3(rot_ang * rot_axis) @ pose.R),
                )
            )
            continue
        # zero-sigma paths skip the arithmetic so clean poses stay bitwise
        p_obs = pose.p if sigma_p == 0.0 else pose.p + sigma_p * noise[0:3]
        r_obs = pose.R if sigma_r == 0.0 else exp_so3(sigma_r * noise[3:6]) @ pose.R
        frames.append(ObservationFrame(t, Pose(p_obs, r_obs)))
    return ObservationLog(
        frames=tuple(frames),
        outlier_frames=tuple(outliers),
        missed_frames=tuple(missed),
        sigma_p=sigma_p,
        sigma_r=sigma_r,
        outlier_rate=outlier_rate,
        miss_rate=miss_rate,
        seed=seed,
        obs_rate=obs_rate,
    )
