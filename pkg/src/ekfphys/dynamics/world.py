"""Rigid bodies, the world container and the semi-implicit stepper.

A step solves the contact LCP for post-step twists, then integrates
poses with the new velocities:

    p   <- p + v' * dt
    R   <- exp_so3(omega' * dt) * R

Angular velocity is spatial (world frame), matching the left-multiplied
orientation update; the mass matrix therefore carries R I_body R^T.
Gyroscopic coupling is neglected: the twist update is impulse-linear.

Worlds are value objects: ``step`` returns a new world and never mutates
its input, so identical inputs produce bitwise-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import NumericalFailure
from ..liegroup import Pose, Twist, exp_so3
from .collision import Contact, generate_contacts
from .lcp import LcpSolution, SolverParams, assemble_lcp, solve_lcp
from .shapes import Box, ConvexMesh, Plane, Sphere

__all__ = ["RigidBody", "SimParams", "World", "StepResult", "integrate_pose", "step"]


@dataclass(frozen=True)
class RigidBody:
    """A convex rigid body with mass properties and current motion state."""

    shape: object
    mass: float
    inertia_body: np.ndarray
    pose: Pose
    twist: Twist

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("body mass must be positive")
        object.__setattr__(self, "inertia_body", np.asarray(self.inertia_body, dtype=float))

    @classmethod
    def from_shape(cls, shape, mass: float, pose: Pose | None = None, twist: Twist | None = None):
        """Body with the uniform-density inertia of its shape."""
        return cls(
            shape=shape,
            mass=mass,
            inertia_body=shape.inertia(mass),
            pose=pose if pose is not None else Pose.identity(),
            twist=twist if twist is not None else Twist.zero(),
        )


@dataclass(frozen=True)
class SimParams:
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    margin: float = 1e-3
    restitution: float = 0.0
    baumgarte: float = 0.1
    max_depth: float = 0.05  # tunneling guard
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self):
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))


@dataclass(frozen=True)
class World:
    bodies: tuple
    planes: tuple
    params: SimParams = field(default_factory=SimParams)

    def __post_init__(self):
        object.__setattr__(self, "bodies", tuple(self.bodies))
        object.__setattr__(self, "planes", tuple(self.planes))

    def replace_body(self, index: int, body: RigidBody) -> "World":
        bodies = list(self.bodies)
        bodies[index] = body
        return World(tuple(bodies), self.planes, self.params)


@dataclass(frozen=True)
class StepResult:
    world: World
    contacts: tuple
    solution: LcpSolution


def integrate_pose(pose: Pose, twist: Twist, dt: float) -> Pose:
    """Semi-implicit position/orientation update with the given twist."""
    return Pose(pose.p + twist.v * dt, exp_so3(twist.omega * dt) @ pose.R)


def _substep(world: World, theta: float, dt: float, contacts, external_wrenches) -> StepResult:
    params = world.params
    if contacts is None:
        contacts = generate_contacts(world.bodies, world.planes, params.margin)
    for ct in contacts:
        if ct.depth > params.max_depth:
            raise NumericalFailure(
                "tunneling guard: contact depth exceeds limit",
                {"depth": ct.depth, "limit": params.max_depth},
            )
    solution = solve_lcp(
        assemble_lcp(
            world.bodies,
            contacts,
            theta,
            dt,
            params.gravity,
            restitution=params.restitution,
            baumgarte=params.baumgarte,
            external_wrenches=external_wrenches,
        ),
        params.solver,
    )
    bodies = []
    for i, body in enumerate(world.bodies):
        omega, v = solution.body_twist(i)
        twist = Twist(omega, v)
        bodies.append(replace(body, pose=integrate_pose(body.pose, twist, dt), twist=twist))
    return StepResult(World(tuple(bodies), world.planes, params), tuple(contacts), solution)


def step(
    world: World,
    theta: float,
    dt: float,
    contacts: list[Contact] | None = None,
    external_wrenches=None,
) -> StepResult:
    """Advance the world by dt with friction mu = theta**2.

    ``contacts`` overrides contact generation (used by the filter to hold
    the active set fixed while differentiating). On solver failure the
    step is retried as two half steps with freshly generated contacts
    before the failure propagates.
    """
    try:
        return _substep(world, theta, dt, contacts, external_wrenches)
    except NumericalFailure:
        if contacts is not None:
            raise  # a pinned contact set cannot be re-generated mid-step
        half = _substep(world, theta, 0.5 * dt, None, external_wrenches)
        return _substep(half.world, theta, 0.5 * dt, None, external_wrenches)
