"""Velocity-impulse contact dynamics as a mixed linear complementarity problem.

One step of the dynamics solves for the post-step generalized velocity
xi (stacked per-body [omega, v] blocks) together with contact impulses:

    M xi - G^T z - A^T y = q,        q = M xi_t + dt * f_ext
    s = G xi + F z + m >= 0,         s . z = 0,  s, z >= 0
    A xi = 0

The inequality rows come in three groups per contact: one non-penetration
row, ``N_FRICTION_DIRS`` friction rows, and one friction-cone coupling row
tying the friction impulses to mu times the normal impulse through the
selector matrix E. The cone rows have no G part, so they transmit no
impulse; they only bound the friction block. ``m`` carries restitution
(c * approach speed) and position stabilization: a Baumgarte push-out for
penetrating contacts and a speculative allowance for contacts still
separated by a gap.

The solver is a Mehrotra predictor-corrector interior-point method on the
monotone LCP above. Problems here are small (tens of rows), so all linear
algebra is dense.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import NumericalFailure
from .collision import Contact, N_FRICTION_DIRS

__all__ = ["LcpProblem", "LcpSolution", "SolverParams", "assemble_lcp", "solve_lcp"]


@dataclass(frozen=True)
class SolverParams:
    """Interior-point settings.

    Defaults drive residuals close to machine precision, far below the
    guaranteed bound; ``accept_tol`` is the fallback level at the iteration
    cap below which a solution is still returned instead of raising.
    """

    residual_tol: float = 1e-12
    gap_tol: float = 1e-13
    accept_tol: float = 1e-8
    max_iterations: int = 50
    regularization: float = 1e-10
    step_fraction: float = 0.99


@dataclass
class LcpProblem:
    mass: np.ndarray  # (6N, 6N) block-diagonal mass-inertia
    g_mat: np.ndarray  # (mi, 6N) stacked inequality rows [J_c; J_f; cone zeros]
    f_mat: np.ndarray  # (mi, mi) friction coupling (E blocks and mu diagonal)
    a_mat: np.ndarray  # (me, 6N) equality rows (empty here)
    q: np.ndarray  # (6N,) momentum + external impulse
    m_vec: np.ndarray  # (mi,) restitution and stabilization offsets
    n_bodies: int
    n_contacts: int

    @property
    def n_vel(self) -> int:
        return 6 * self.n_bodies


@dataclass
class LcpSolution:
    xi: np.ndarray  # (6N,) post-step generalized velocity
    z: np.ndarray  # (mi,) multipliers [normal; friction; cone]
    s: np.ndarray  # (mi,) slacks
    y: np.ndarray  # (me,) equality multipliers
    iterations: int
    residuals: dict

    def body_twist(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        blk = self.xi[6 * i : 6 * i + 6]
        return blk[0:3].copy(), blk[3:6].copy()

    def normal_impulses(self, n_contacts: int) -> np.ndarray:
        return self.z[:n_contacts].copy()


def assemble_lcp(
    bodies,
    contacts: list[Contact],
    theta: float,
    dt: float,
    gravity: np.ndarray,
    restitution: float = 0.0,
    baumgarte: float = 0.1,
    external_wrenches=None,
) -> LcpProblem:
    """Build the mixed LCP for one step.

    ``theta`` parameterizes friction as mu = theta**2, shared by all
    contacts of the step. ``external_wrenches`` is an optional (N, 6)
    array of [torque, force] blocks added to gravity.
    """
    n_bodies = len(bodies)
    nv = 6 * n_bodies
    mu = float(theta) * float(theta)

    mass = np.zeros((nv, nv))
    xi_t = np.zeros(nv)
    f_ext = np.zeros(nv)
    gravity = np.asarray(gravity, dtype=float)
    for i, body in enumerate(bodies):
        rot = body.pose.R.matrix
        inertia_w = rot @ body.inertia_body @ rot.T
        mass[6 * i : 6 * i + 3, 6 * i : 6 * i + 3] = inertia_w
        mass[6 * i + 3 : 6 * i + 6, 6 * i + 3 : 6 * i + 6] = np.eye(3) * body.mass
        xi_t[6 * i : 6 * i + 3] = body.twist.omega
        xi_t[6 * i + 3 : 6 * i + 6] = body.twist.v
        f_ext[6 * i + 3 : 6 * i + 6] = body.mass * gravity
    if external_wrenches is not None:
        f_ext = f_ext + np.asarray(external_wrenches, dtype=float).reshape(nv)

    q = mass @ xi_t + dt * f_ext

    nc = len(contacts)
    nd = N_FRICTION_DIRS
    mi = nc * (2 + nd)
    g_mat = np.zeros((mi, nv))
    f_mat = np.zeros((mi, mi))
    m_vec = np.zeros(mi)

    row_f0 = nc  # first friction row
    row_c0 = nc + nd * nc  # first cone row
    for k, ct in enumerate(contacts):
        dirs_all = np.vstack([ct.normal[None, :], ct.dirs])  # (1 + nd, 3)
        rows = np.concatenate(([k], row_f0 + nd * k + np.arange(nd)))
        for body, sign in ((ct.body_a, 1.0), (ct.body_b, -1.0)):
            if body < 0:
                continue
            r = ct.point - bodies[body].pose.p
            g_mat[np.ix_(rows, range(6 * body, 6 * body + 3))] += sign * np.cross(
                r[None, :], dirs_all
            )
            g_mat[np.ix_(rows, range(6 * body + 3, 6 * body + 6))] += sign * dirs_all
        approach = g_mat[k] @ xi_t
        if ct.depth >= 0.0:
            bias = -baumgarte * ct.depth / dt
        else:
            bias = -ct.depth / dt  # may close the remaining gap this step
        m_vec[k] = restitution * approach + bias
        fr = row_f0 + nd * k
        f_mat[fr : fr + nd, row_c0 + k] = 1.0  # E block
        f_mat[row_c0 + k, fr : fr + nd] = -1.0  # -E^T block
        f_mat[row_c0 + k, k] = mu

    a_mat = np.zeros((0, nv))
    return LcpProblem(
        mass=mass,
        g_mat=g_mat,
        f_mat=f_mat,
        a_mat=a_mat,
        q=q,
        m_vec=m_vec,
        n_bodies=n_bodies,
        n_contacts=nc,
    )


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0.0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def solve_lcp(problem: LcpProblem, params: SolverParams = SolverParams()) -> LcpSolution:
    """Solve the mixed LCP with a Mehrotra predictor-corrector method.

    Raises NumericalFailure when residuals are still above ``accept_tol``
    (scaled by 1 + |q|) at the iteration cap.
    """
    mass, q = problem.mass, problem.q
    g_mat, f_mat, a_mat, m_vec = problem.g_mat, problem.f_mat, problem.a_mat, problem.m_vec
    nv = problem.n_vel
    mi = g_mat.shape[0]
    me = a_mat.shape[0]
    scale = 1.0 + float(np.linalg.norm(q))

    if mi == 0 and me == 0:
        xi = np.linalg.solve(mass, q)
        return LcpSolution(
            xi=xi,
            z=np.zeros(0),
            s=np.zeros(0),
            y=np.zeros(0),
            iterations=0,
            residuals={"dual": 0.0, "primal": 0.0, "gap": 0.0},
        )
    if mi == 0:
        kkt = np.block([[mass, -a_mat.T], [a_mat, np.zeros((me, me))]])
        sol = np.linalg.solve(kkt, np.concatenate([q, np.zeros(me)]))
        return LcpSolution(
            xi=sol[:nv],
            z=np.zeros(0),
            s=np.zeros(0),
            y=sol[nv:],
            iterations=0,
            residuals={"dual": 0.0, "primal": 0.0, "gap": 0.0},
        )

    g_t = np.ascontiguousarray(g_mat.T)
    xi = np.linalg.solve(mass, q)
    z = np.ones(mi)
    s_raw = g_mat @ xi + f_mat @ z + m_vec
    shift = max(0.0, 1e-2 - float(np.min(s_raw)))
    s = s_raw + shift + 1.0

    reg = params.regularization
    dim = nv + mi + me
    kkt = np.zeros((dim, dim))
    kkt[:nv, :nv] = mass + reg * np.eye(nv)
    kkt[:nv, nv : nv + mi] = -g_t
    kkt[nv : nv + mi, :nv] = g_mat
    if me:
        kkt[:nv, nv + mi :] = -a_mat.T
        kkt[nv + mi :, :nv] = a_mat
        eq_diag = np.arange(nv + mi, dim)
        kkt[eq_diag, eq_diag] = reg
    ineq_diag = np.arange(nv, nv + mi)
    y = np.zeros(me)

    best = None
    stall = 0
    last_gap = np.inf
    iterations = 0
    for iterations in range(1, params.max_iterations + 1):
        r_dyn = mass @ xi - g_t @ z - q
        if me:
            r_dyn -= a_mat.T @ y
        r_in = g_mat @ xi + f_mat @ z + m_vec - s
        r_eq = a_mat @ xi if me else np.zeros(0)
        gap = float(s @ z)
        res = {
            "dual": float(np.max(np.abs(r_dyn))),
            "primal": float(np.max(np.abs(r_in))) if mi else 0.0,
            "equality": float(np.max(np.abs(r_eq))) if me else 0.0,
            "gap": gap,
        }
        if best is None or gap < best[0]:
            best = (gap, xi.copy(), z.copy(), s.copy(), y.copy(), res)
        worst = max(res["dual"], res["primal"], res.get("equality", 0.0))
        if worst <= params.residual_tol * scale and gap <= params.gap_tol * scale:
            break
        if gap > 0.7 * last_gap:
            stall += 1
        else:
            stall = 0
        if stall >= 4 and worst <= params.accept_tol * scale and gap <= params.accept_tol * scale:
            break  # converged as far as float arithmetic goes
        last_gap = gap

        mu_gap = gap / mi
        d = s / z
        kkt[nv : nv + mi, nv : nv + mi] = f_mat
        kkt[ineq_diag, ineq_diag] += d + reg
        try:
            lu = scipy.linalg.lu_factor(kkt, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise NumericalFailure("contact solver KKT factorization failed", res) from exc

        # predictor (affine) direction
        rhs = np.concatenate([-r_dyn, -r_in - s, -r_eq])
        sol = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
        dz_a = sol[nv : nv + mi]
        ds_a = -s - d * dz_a
        alpha_p = min(1.0, _max_step(s, ds_a))
        alpha_d = min(1.0, _max_step(z, dz_a))
        mu_aff = float((s + alpha_p * ds_a) @ (z + alpha_d * dz_a)) / mi
        sigma = (max(mu_aff, 0.0) / mu_gap) ** 3 if mu_gap > 0.0 else 0.0

        # corrector
        f4 = s * z + ds_a * dz_a - sigma * mu_gap
        rhs = np.concatenate([-r_dyn, -r_in - f4 / z, -r_eq])
        sol = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
        dxi, dz = sol[:nv], sol[nv : nv + mi]
        dy = sol[nv + mi :]
        ds = -f4 / z - d * dz

        alpha = params.step_fraction * min(_max_step(s, ds), _max_step(z, dz))
        alpha = min(1.0, alpha)
        xi = xi + alpha * dxi
        z = z + alpha * dz
        s = s + alpha * ds
        if me:
            y = y + alpha * dy

    r_dyn = mass @ xi - g_mat.T @ z - q
    if me:
        r_dyn -= a_mat.T @ y
    r_in = g_mat @ xi + f_mat @ z + m_vec - s
    gap = float(s @ z)
    res = {
        "dual": float(np.max(np.abs(r_dyn))),
        "primal": float(np.max(np.abs(r_in))) if mi else 0.0,
        "gap": gap,
    }
    if me:
        res["equality"] = float(np.max(np.abs(a_mat @ xi)))
    worst = max(res["dual"], res["primal"], res.get("equality", 0.0))
    if worst > params.accept_tol * scale or gap > params.accept_tol * scale:
        if best is not None and best[0] < gap:
            _, xi_b, z_b, s_b, y_b, res_b = best
            worst_b = max(res_b["dual"], res_b["primal"], res_b.get("equality", 0.0))
            if worst_b <= params.accept_tol * scale and res_b["gap"] <= params.accept_tol * scale:
                return LcpSolution(xi_b, z_b, s_b, y_b, iterations, res_b)
        raise NumericalFailure("contact solver did not converge", res)
    return LcpSolution(xi=xi, z=z, s=s, y=y, iterations=iterations, residuals=res)
