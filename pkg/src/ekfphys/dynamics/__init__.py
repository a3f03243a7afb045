"""Rigid-body shapes, contact generation and the complementarity stepper."""

from .collision import Contact, N_FRICTION_DIRS, generate_contacts
from .lcp import LcpProblem, LcpSolution, SolverParams, assemble_lcp, solve_lcp
from .shapes import (
    Box,
    ConvexMesh,
    Plane,
    Sphere,
    inertia_from_convex_mesh,
    load_mesh_vertices,
)
from .world import RigidBody, SimParams, StepResult, World, integrate_pose, step

__all__ = [
    "Box",
    "Contact",
    "ConvexMesh",
    "LcpProblem",
    "LcpSolution",
    "N_FRICTION_DIRS",
    "Plane",
    "RigidBody",
    "SimParams",
    "Sphere",
    "SolverParams",
    "StepResult",
    "World",
    "assemble_lcp",
    "generate_contacts",
    "inertia_from_convex_mesh",
    "integrate_pose",
    "load_mesh_vertices",
    "solve_lcp",
    "step",
]
