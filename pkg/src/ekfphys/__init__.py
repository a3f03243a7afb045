"""Rigid-body contact simulation and filtering for 6-DoF object tracking.

Subpackages and modules:

- ``liegroup``: SO(3) maps and the tangent arithmetic of the tracker state.
- ``dynamics``: shapes, contact generation, the complementarity contact
  solver and the world stepper.
- ``ekf``: error-state extended Kalman filter on top of the stepper, with
  friction identification through mu = theta**2.
- ``synth``: scenario sampling, ground-truth simulation and observation
  corruption.
- ``harness``: metrics, experiment configuration, record files and the
  command-line pipeline.
"""

from .errors import ConfigError, InitializationFailure, NumericalFailure
from .liegroup import (
    FilterState,
    Pose,
    Rotation,
    Twist,
    exp_so3,
    hat,
    log_so3,
    pose_ominus,
    pose_oplus,
    state_boxminus,
    state_boxplus,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InitializationFailure",
    "NumericalFailure",
    "FilterState",
    "Pose",
    "Rotation",
    "Twist",
    "exp_so3",
    "hat",
    "log_so3",
    "pose_ominus",
    "pose_oplus",
    "state_boxminus",
    "state_boxplus",
    "__version__",
]
