"""Rotation and manifold arithmetic for the 13-dimensional tracker state.

The tracked state is a tuple (p, R, v, omega, theta) on the product
manifold R^3 x SO(3) x R^3 x R^3 x R. Uncertainty lives in a local
tangent parameterization ordered

    [dp (3), dR (3), dv (3), domega (3), dtheta (1)]

and rotations are perturbed on the left: R' = exp_so3(dR) * R. The block
ordering above is a frozen contract; covariance matrices, motion
Jacobians and the observation model all index into it.

Angular velocities follow the same left/spatial convention as the
perturbation: integrating a twist multiplies exp_so3(omega * dt) onto the
left of R, so omega is expressed in world coordinates throughout.

Rotations are stored as unit quaternions (scalar first) and renormalized
after every composition; all interfaces expose 3x3 matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Rotation",
    "Pose",
    "Twist",
    "FilterState",
    "TANGENT_DIM",
    "POSE_DIM",
    "hat",
    "exp_so3",
    "log_so3",
    "state_boxplus",
    "state_boxminus",
    "pose_oplus",
    "pose_ominus",
]

TANGENT_DIM = 13
POSE_DIM = 6

_SMALL_ANGLE = 1e-8


def _quat_normalize(q: np.ndarray) -> np.ndarray:
    q = q / np.linalg.norm(q)
    # Canonical sign keeps log_so3 on the principal branch.
    return -q if q[0] < 0.0 else q


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, av = a[0], a[1:]
    bw, bv = b[0], b[1:]
    return np.concatenate(([aw * bw - av @ bv], aw * bv + bw * av + np.cross(av, bv)))


def _quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    )


def _quat_from_matrix(m: np.ndarray) -> np.ndarray:
    # Shepperd's method: branch on the largest of trace and diagonal terms
    # so the divisor stays away from zero even for angles near pi.
    t = m[0, 0] + m[1, 1] + m[2, 2]
    if t > 0.0:
        r = np.sqrt(1.0 + t)
        c = 0.5 / r
        q = np.array(
            [0.5 * r, (m[2, 1] - m[1, 2]) * c, (m[0, 2] - m[2, 0]) * c, (m[1, 0] - m[0, 1]) * c]
        )
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        r = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        c = 0.5 / r
        q = np.array(
            [(m[2, 1] - m[1, 2]) * c, 0.5 * r, (m[0, 1] + m[1, 0]) * c, (m[0, 2] + m[2, 0]) * c]
        )
    elif m[1, 1] >= m[2, 2]:
        r = np.sqrt(1.0 - m[0, 0] + m[1, 1] - m[2, 2])
        c = 0.5 / r
        q = np.array(
            [(m[0, 2] - m[2, 0]) * c, (m[0, 1] + m[1, 0]) * c, 0.5 * r, (m[1, 2] + m[2, 1]) * c]
        )
    else:
        r = np.sqrt(1.0 - m[0, 0] - m[1, 1] + m[2, 2])
        c = 0.5 / r
        q = np.array(
            [(m[1, 0] - m[0, 1]) * c, (m[0, 2] + m[2, 0]) * c, (m[1, 2] + m[2, 1]) * c, 0.5 * r]
        )
    return _quat_normalize(q)


class Rotation:
    """An element of SO(3), stored as a unit quaternion.

    Value semantics: instances are treated as immutable. Composition and
    construction renormalize, so orthonormality cannot drift across long
    integration runs.
    """

    __slots__ = ("_q", "_m")

    def __init__(self, quat: np.ndarray):
        self._q = _quat_normalize(np.asarray(quat, dtype=float))
        self._m: np.ndarray | None = None

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def from_quat(cls, quat) -> "Rotation":
        """Build from a scalar-first quaternion (normalized on entry)."""
        return cls(np.asarray(quat, dtype=float))

    @classmethod
    def from_unit_quat(cls, quat) -> "Rotation":
        """Adopt an already-unit scalar-first quaternion without rescaling.

        Deserialization path: rescaling a stored unit quaternion can move
        its last bits, which would break bitwise reproducibility of files.
        The caller is responsible for checking the norm.
        """
        q = np.asarray(quat, dtype=float)
        r = cls.__new__(cls)
        r._q = -q if q[0] < 0.0 else q
        r._m = None
        return r

    @classmethod
    def from_matrix(cls, m) -> "Rotation":
        return cls(_quat_from_matrix(np.asarray(m, dtype=float)))

    @property
    def quat(self) -> np.ndarray:
        """Scalar-first unit quaternion with non-negative scalar part."""
        return self._q.copy()

    @property
    def matrix(self) -> np.ndarray:
        if self._m is None:
            self._m = _quat_to_matrix(self._q)
        return self._m

    def inverse(self) -> "Rotation":
        q = self._q
        return Rotation(np.array([q[0], -q[1], -q[2], -q[3]]))

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Rotate a 3-vector (or (..., 3) stack of vectors)."""
        v = np.asarray(vec, dtype=float)
        return v @ self.matrix.T

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return Rotation(_quat_mul(self._q, other._q))

    def __repr__(self) -> str:  # pragma: no cover
        return f"Rotation(quat={np.array2string(self._q, precision=6)})"


def hat(tau) -> np.ndarray:
    """Map a 3-vector to its skew-symmetric cross-product matrix."""
    x, y, z = np.asarray(tau, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_so3(tau) -> Rotation:
    """Exponential map R^3 -> SO(3).

    Equivalent to the Rodrigues formula; built through the axis-angle
    quaternion so the result is orthonormal by construction. Angles below
    1e-8 take a Taylor branch for the sin(theta/2)/theta factor.
    """
    tau = np.asarray(tau, dtype=float)
    angle = np.linalg.norm(tau)
    half = 0.5 * angle
    if angle < _SMALL_ANGLE:
        w = 1.0 - 0.5 * half * half
        k = 0.5 - angle * angle / 48.0
    else:
        w = np.cos(half)
        k = np.sin(half) / angle
    return Rotation(np.concatenate(([w], k * tau)))


def log_so3(rot) -> np.ndarray:
    """Logarithm map SO(3) -> R^3, principal branch (norm in [0, pi]).

    Accepts a Rotation or a 3x3 matrix. Going through the quaternion keeps
    the axis well conditioned near angle pi (Shepperd branch selection) and
    a Taylor branch covers angles near zero.
    """
    if not isinstance(rot, Rotation):
        rot = Rotation.from_matrix(rot)
    q = rot._q
    w = q[0]
    vec = q[1:]
    s = np.linalg.norm(vec)
    if s < 1e-9:
        # angle ~ 2s; error of the linearization is O(s^3)
        return 2.0 / w * vec
    angle = 2.0 * np.arctan2(s, w)
    return (angle / s) * vec


@dataclass(frozen=True)
class Pose:
    """World pose of a body: position p and orientation R."""

    p: np.ndarray
    R: Rotation

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), Rotation.identity())


@dataclass(frozen=True)
class Twist:
    """Spatial velocity ordered (omega, v) to match the contact-solver layout.

    omega is the world-frame angular velocity (left/spatial convention used
    by the whole package); v is the world-frame velocity of the body origin.
    """

    omega: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    @classmethod
    def zero(cls) -> "Twist":
        return cls(np.zeros(3), np.zeros(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.omega, self.v])


@dataclass(frozen=True)
class FilterState:
    """Mean of the tracker: pose, twist and the friction parameter theta.

    The effective friction coefficient is mu = theta**2; theta itself is
    unconstrained and may pass through zero during filtering.
    """

    p: np.ndarray
    R: Rotation
    v: np.ndarray
    omega: np.ndarray
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "theta", float(self.theta))

    @property
    def pose(self) -> Pose:
        return Pose(self.p, self.R)

    @property
    def twist(self) -> Twist:
        return Twist(self.omega, self.v)

    @property
    def mu(self) -> float:
        return self.theta * self.theta


def state_boxplus(state: FilterState, delta) -> FilterState:
    """Retract a 13-dim tangent increment onto the state manifold.

    Rotation block is applied on the left: R' = exp_so3(dR) * R. The five
    blocks are independent; a zero block leaves its component untouched.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (TANGENT_DIM,):
        raise ValueError(f"expected a {TANGENT_DIM}-vector, got shape {delta.shape}")
    return FilterState(
        p=state.p + delta[0:3],
        R=exp_so3(delta[3:6]) @ state.R,
        v=state.v + delta[6:9],
        omega=state.omega + delta[9:12],
        theta=state.theta + delta[12],
    )


def state_boxminus(a: FilterState, b: FilterState) -> np.ndarray:
    """Tangent difference a [-] b, the inverse of state_boxplus at b."""
    return np.concatenate(
        [
            a.p - b.p,
            log_so3(a.R @ b.R.inverse()),
            a.v - b.v,
            a.omega - b.omega,
            [a.theta - b.theta],
        ]
    )


def pose_oplus(pose: Pose, delta) -> Pose:
    """Retract a 6-dim increment [dp, dR] onto a pose (left perturbation)."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (POSE_DIM,):
        raise ValueError(f"expected a {POSE_DIM}-vector, got shape {delta.shape}")
    return Pose(pose.p + delta[0:3], exp_so3(delta[3:6]) @ pose.R)


def pose_ominus(a: Pose, b: Pose) -> np.ndarray:
    """Tangent difference a [-] b for poses: [dp, log(Ra * Rb^T)]."""
    return np.concatenate([a.p - b.p, log_so3(a.R @ b.R.inverse())])
