"""Error-state extended Kalman filter over the contact dynamics.

The belief is a Gaussian on the 13-dimensional tangent space of the
state manifold (see :mod:`ekfphys.liegroup` for the frozen ordering
[dp, dR, dv, domega, dtheta]). The motion model is one step of the
contact solver; its Jacobian is obtained by central finite differences
with the contact set held fixed at the nominal state, so the
linearization never straddles a contact-switching boundary.

Friction enters as mu = theta**2, which has zero gradient at theta = 0.
The Jacobian column for theta is therefore evaluated at a linearization
point pushed away from zero (``theta_floor``), while the mean is always
propagated with the true theta. Without this, a filter started at
theta = 0 provably never updates theta: all cross-covariances stay
exactly zero.

Two filter modes share the machinery: "ekfphys" estimates theta,
"ekfphys-f" pins it (zero initial variance and process noise, Jacobian
column replaced by identity).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg

from .dynamics import World, step
from .errors import InitializationFailure, NumericalFailure
from .liegroup import (
    TANGENT_DIM,
    FilterState,
    Pose,
    Rotation,
    Twist,
    log_so3,
    pose_ominus,
    state_boxminus,
    state_boxplus,
)

__all__ = [
    "NoiseConfig",
    "ObservationFrame",
    "BeliefState",
    "WorldContext",
    "FilterRecord",
    "FilterResult",
    "init_belief",
    "motion_model",
    "jacobian_motion",
    "predict",
    "innovation",
    "gating_distance",
    "correct",
    "run_filter",
]

POSE_OBS_DIM = 6
_FD_STEP = 1e-6


@dataclass(frozen=True)
class NoiseConfig:
    """Filter noise parameters.

    ``sigma0_*`` are initial variances per tangent block, ``s_motion`` /
    ``s_theta`` additive process variances per prediction step, ``q_p`` /
    ``q_r`` observation variances, ``zeta`` the squared-Mahalanobis
    gate. ``theta_floor`` is the minimum |theta| used when linearizing
    the friction column.
    """

    sigma0_p: float
    sigma0_r: float
    sigma0_v: float
    sigma0_w: float
    sigma0_theta: float
    s_motion: float
    s_theta: float
    q_p: float
    q_r: float
    zeta: float
    theta_floor: float = 0.05

    def initial_covariance(self) -> np.ndarray:
        d = np.empty(TANGENT_DIM)
        d[0:3] = self.sigma0_p
        d[3:6] = self.sigma0_r
        d[6:9] = self.sigma0_v
        d[9:12] = self.sigma0_w
        d[12] = self.sigma0_theta
        return np.diag(d)

    def process_noise(self) -> np.ndarray:
        d = np.full(TANGENT_DIM, self.s_motion)
        d[12] = self.s_theta
        return np.diag(d)

    def observation_noise(self) -> np.ndarray:
        d = np.empty(POSE_OBS_DIM)
        d[0:3] = self.q_p
        d[3:6] = self.q_r
        return np.diag(d)


@dataclass(frozen=True)
class ObservationFrame:
    """One pose detection; ``pose`` is None when the detector missed."""

    t: float
    pose: Pose | None

    @property
    def valid(self) -> bool:
        return self.pose is not None


@dataclass(frozen=True)
class BeliefState:
    mean: FilterState
    cov: np.ndarray  # (13, 13)


@dataclass(frozen=True)
class WorldContext:
    """Simulation world with the index of the tracked body."""

    world: World
    body_index: int = 0


@dataclass(frozen=True)
class FilterRecord:
    frame: int
    t: float
    belief: BeliefState
    accepted: bool | None  # None: no valid observation at this frame
    gate: float | None


@dataclass(frozen=True)
class FilterResult:
    records: tuple[FilterRecord, ...]
    context: WorldContext
    init_frame: int


# ---------------------------------------------------------------------------
# motion


def _state_of(ctx: WorldContext, theta: float) -> FilterState:
    body = ctx.world.bodies[ctx.body_index]
    return FilterState(body.pose.p, body.pose.R, body.twist.v, body.twist.omega, theta)


def motion_model(ctx: WorldContext, state: FilterState, dt: float, contacts=None):
    """One dynamics step from ``state``; other bodies in the world advance too.

    Returns (next state, next context, contacts used).
    """
    body = ctx.world.bodies[ctx.body_index]
    body = replace(body, pose=Pose(state.p, state.R), twist=Twist(state.omega, state.v))
    result = step(
        ctx.world.replace_body(ctx.body_index, body),
        state.theta,
        dt,
        contacts=list(contacts) if contacts is not None else None,
    )
    nxt = WorldContext(result.world, ctx.body_index)
    return _state_of(nxt, state.theta), nxt, result.contacts


def _floored_theta(theta: float, floor: float) -> float:
    sign = 1.0 if theta >= 0.0 else -1.0
    return sign * max(abs(theta), floor)


def _fd_column(ctx, state, dt, contacts, nominal, delta: np.ndarray, h: float) -> np.ndarray:
    for attempt in range(3):
        hh = h / 10.0**attempt
        try:
            fp, _, _ = motion_model(ctx, state_boxplus(state, hh * delta), dt, contacts)
            fm, _, _ = motion_model(ctx, state_boxplus(state, -hh * delta), dt, contacts)
        except NumericalFailure:
            if attempt == 2:
                raise
            continue
        return (state_boxminus(fp, nominal) - state_boxminus(fm, nominal)) / (2.0 * hh)
    raise AssertionError("unreachable")


def jacobian_motion(
    ctx: WorldContext,
    state: FilterState,
    dt: float,
    theta_floor: float = 0.05,
    estimate_theta: bool = True,
    h: float = _FD_STEP,
):
    """Central-difference motion Jacobian with a frozen contact set.

    Returns (G, nominal next state, next context). The contact set is
    generated once at the nominal state and pinned for all perturbed
    steps.
    """
    nominal, nxt, contacts = motion_model(ctx, state, dt)
    contacts = list(contacts)
    g = np.zeros((TANGENT_DIM, TANGENT_DIM))
    delta = np.zeros(TANGENT_DIM)
    for i in range(TANGENT_DIM - 1):
        delta[:] = 0.0
        delta[i] = 1.0
        g[:, i] = _fd_column(ctx, state, dt, contacts, nominal, delta, h)
    if estimate_theta:
        lin = replace(state, theta=_floored_theta(state.theta, theta_floor))
        delta[:] = 0.0
        delta[12] = 1.0
        g[:, 12] = _fd_column(ctx, lin, dt, contacts, nominal, delta, h)
        g[12, 12] = 1.0  # theta is constant through the step
    else:
        g[12, :] = 0.0
        g[12, 12] = 1.0
        g[:12, 12] = 0.0
    return g, nominal, nxt


def predict(
    belief: BeliefState,
    ctx: WorldContext,
    config: NoiseConfig,
    dt: float,
    estimate_theta: bool = True,
):
    """EKF time update: propagate the mean, push covariance through G."""
    g, nominal, nxt = jacobian_motion(
        ctx, belief.mean, dt, theta_floor=config.theta_floor, estimate_theta=estimate_theta
    )
    cov = g @ belief.cov @ g.T + config.process_noise()
    cov = 0.5 * (cov + cov.T)
    return BeliefState(nominal, cov), nxt


# ---------------------------------------------------------------------------
# observation


def innovation(belief: BeliefState, frame: ObservationFrame) -> np.ndarray:
    """Pose residual observation - prediction, in the tangent space."""
    return pose_ominus(frame.pose, belief.mean.pose)


def _innovation_cov(belief: BeliefState, config: NoiseConfig) -> np.ndarray:
    return belief.cov[:POSE_OBS_DIM, :POSE_OBS_DIM] + config.observation_noise()


def gating_distance(belief: BeliefState, frame: ObservationFrame, config: NoiseConfig) -> float:
    """Squared Mahalanobis distance of the frame under the predicted belief."""
    r = innovation(belief, frame)
    s_inn = _innovation_cov(belief, config)
    try:
        cho = scipy.linalg.cho_factor(s_inn, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailure("singular innovation covariance", {"cause": str(exc)}) from exc
    return float(r @ scipy.linalg.cho_solve(cho, r, check_finite=False))


def correct(belief: BeliefState, frame: ObservationFrame, config: NoiseConfig):
    """EKF measurement update with gating.

    Returns (belief, accepted, gate distance); a gated or invalid frame
    leaves the belief untouched. Uses the Joseph form so the covariance
    stays positive semidefinite under rounding.
    """
    if not frame.valid:
        return belief, False, float("nan")
    r = innovation(belief, frame)
    s_inn = _innovation_cov(belief, config)
    try:
        cho = scipy.linalg.cho_factor(s_inn, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailure("singular innovation covariance", {"cause": str(exc)}) from exc
    gate = float(r @ scipy.linalg.cho_solve(cho, r, check_finite=False))
    if gate > config.zeta:
        return belief, False, gate

    gain = scipy.linalg.cho_solve(cho, belief.cov[:POSE_OBS_DIM, :], check_finite=False).T
    mean = state_boxplus(belief.mean, gain @ r)
    i_kh = np.eye(TANGENT_DIM)
    i_kh[:, :POSE_OBS_DIM] -= gain
    cov = i_kh @ belief.cov @ i_kh.T + gain @ config.observation_noise() @ gain.T
    cov = 0.5 * (cov + cov.T)
    return BeliefState(mean, cov), True, gate


# ---------------------------------------------------------------------------
# initialization and the full loop


def init_belief(frames, config: NoiseConfig, theta0: float = 0.0):
    """Belief from the first two valid frames (finite-difference twist).

    Returns (belief, index of the second valid frame).
    """
    valid = [i for i, f in enumerate(frames) if f.valid]
    if len(valid) < 2:
        raise InitializationFailure("need at least two valid frames to initialize")
    i0, i1 = valid[0], valid[1]
    f0, f1 = frames[i0], frames[i1]
    dt = f1.t - f0.t
    if dt <= 0.0:
        raise InitializationFailure(f"non-increasing timestamps: {f0.t} then {f1.t}")
    v = (f1.pose.p - f0.pose.p) / dt
    omega = log_so3(f1.pose.R @ f0.pose.R.inverse()) / dt
    mean = FilterState(f1.pose.p, f1.pose.R, v, omega, theta0)
    return BeliefState(mean, config.initial_covariance()), i1


def run_filter(
    frames,
    context: WorldContext | Callable[[int], WorldContext],
    config: NoiseConfig,
    mode: str = "ekfphys",
    theta0: float = 0.0,
    predict_rate: float = 60.0,
    cut_frame: int | None = None,
) -> FilterResult:
    """Filter a frame sequence.

    Between frames the belief is propagated in substeps at
    ``predict_rate``; valid frames before ``cut_frame`` are used for
    correction, everything after is prediction only. ``context`` may be
    a callable taking the initialization frame index, so callers can
    supply the environment state at that time.
    """
    if mode not in ("ekfphys", "ekfphys-f"):
        raise ValueError(f"unknown filter mode: {mode!r}")
    estimate_theta = mode == "ekfphys"
    belief, i1 = init_belief(frames, config, theta0)
    ctx = context(i1) if callable(context) else context
    records = [FilterRecord(i1, frames[i1].t, belief, None, None)]
    for k in range(i1 + 1, len(frames)):
        span = frames[k].t - frames[k - 1].t
        nsub = max(1, int(round(span * predict_rate)))
        sub_dt = span / nsub
        for _ in range(nsub):
            belief, ctx = predict(belief, ctx, config, sub_dt, estimate_theta)
        use_obs = frames[k].valid and (cut_frame is None or k < cut_frame)
        if use_obs:
            try:
                belief, accepted, gate = correct(belief, frames[k], config)
            except NumericalFailure:
                # a degenerate innovation covariance skips this correction
                accepted, gate = False, float("nan")
        else:
            accepted, gate = None, None
        records.append(FilterRecord(k, frames[k].t, belief, accepted, gate))
    return FilterResult(tuple(records), ctx, i1)
